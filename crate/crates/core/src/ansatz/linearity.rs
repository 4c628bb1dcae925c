//! Diagnostic for the nonlinearity that mid-circuit measurement introduces in
//! the map from input amplitudes to decoded output amplitudes.

use num_complex::Complex64;
use rand::Rng;

use super::{execute, CircuitSpec, LabelPolicy, MeasurementMode};
use crate::error::{bail, Result};
use crate::rng::normal_vector;
use crate::statevec::amplitude_encode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decode {
    /// Output amplitudes as they are; only defined for single-branch outputs.
    Raw,
    /// `sqrt` of the output measurement distribution.
    Magnitude,
}

/// The circuit's input-to-decoded-output map evaluated at `input`.
pub fn induced_map(c: &CircuitSpec, params: &[f64], input: &[Complex64], decode: Decode) -> Result<Vec<Complex64>> {
    let state = amplitude_encode(input, true)?;
    let out = execute(c, params, &state, MeasurementMode::Ensemble, LabelPolicy::None)?;
    match decode {
        Decode::Raw => {
            if out.len() != 1 {
                bail!(
                    State,
                    "raw decoding needs a single-branch output, got {} branches",
                    out.len()
                );
            }
            Ok(out.branches()[0].state.amplitudes().to_vec())
        }
        Decode::Magnitude => Ok(out
            .probabilities()
            .into_iter()
            .map(|p| Complex64::new(p.sqrt(), 0.0))
            .collect()),
    }
}

fn normalized(v: Vec<Complex64>) -> Vec<Complex64> {
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Mean of `‖M(norm(u+v)) − norm(M(u)+M(v))‖` over `trials` random unit
/// vector pairs.
pub fn linearity_residual<R: Rng + ?Sized>(
    c: &CircuitSpec,
    params: &[f64],
    trials: usize,
    rng: &mut R,
    decode: Decode,
) -> Result<f64> {
    let dim = 1 << c.entry_width();
    let mut total = 0.0;
    for _ in 0..trials {
        let u = normalized(normal_vector(rng, dim, true));
        let v = normalized(normal_vector(rng, dim, true));
        total += pair_residual(c, params, &u, &v, decode)?;
    }
    Ok(total / trials.max(1) as f64)
}

pub(crate) fn pair_residual(
    c: &CircuitSpec,
    params: &[f64],
    u: &[Complex64],
    v: &[Complex64],
    decode: Decode,
) -> Result<f64> {
    let lhs = induced_map(c, params, &normalized(add(u, v)), decode)?;
    let mu = induced_map(c, params, u, decode)?;
    let mv = induced_map(c, params, v, decode)?;
    let rhs = normalized(add(&mu, &mv));
    Ok(lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_circuit, AnsatzConfig, Variant};
    use crate::rng::seeded;
    use rand::Rng;

    fn random_params(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = seeded(seed);
        (0..n).map(|_| rng.random_range(-3.14..3.14)).collect()
    }

    #[test]
    fn unitary_circuit_is_linear() {
        let cfg = AnsatzConfig {
            variant: Variant::Plain,
            m: 0,
            ..AnsatzConfig::reverse_bottleneck(3, 0, [2, 2, 2])
        };
        let c = build_circuit(&cfg).unwrap();
        let p = random_params(c.param_count(), 1);
        let r = linearity_residual(&c, &p, 20, &mut seeded(2), Decode::Raw).unwrap();
        assert!(r < 1e-9, "residual {r}");
    }

    #[test]
    fn measured_circuit_is_nonlinear() {
        let c = build_circuit(&AnsatzConfig::reverse_bottleneck(3, 0, [2, 2, 2])).unwrap();
        let p = random_params(c.param_count(), 3);
        let r = linearity_residual(&c, &p, 20, &mut seeded(4), Decode::Magnitude).unwrap();
        assert!(r > 1e-3, "residual {r}");
        assert!(linearity_residual(&c, &p, 1, &mut seeded(4), Decode::Raw).is_err());
    }

    #[test]
    fn invariant_under_global_phase() {
        let c = build_circuit(&AnsatzConfig::reverse_bottleneck(2, 0, [1, 2, 1])).unwrap();
        let p = random_params(c.param_count(), 5);
        let mut rng = seeded(6);
        let u = normalized(normal_vector(&mut rng, 4, true));
        let v = normalized(normal_vector(&mut rng, 4, true));
        let phase = Complex64::from_polar(1.0, 1.234);
        let up: Vec<_> = u.iter().map(|a| a * phase).collect();
        let vp: Vec<_> = v.iter().map(|a| a * phase).collect();
        let r0 = pair_residual(&c, &p, &u, &v, Decode::Magnitude).unwrap();
        let r1 = pair_residual(&c, &p, &up, &vp, Decode::Magnitude).unwrap();
        assert!((r0 - r1).abs() < 1e-12);
    }
}
