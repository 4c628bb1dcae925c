use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{draw_pair, NoiseSchedule, PairSampling, TrainingPair};
use crate::ansatz::{build_circuit, execute, AnsatzConfig, CircuitSpec, LabelPolicy, MeasurementMode};
use crate::error::{bail, Result};
use crate::statevec::{BranchEnsemble, QuantumState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    #[default]
    ParameterShift,
    FiniteDifference,
}

/// Step for [`GradientMethod::FiniteDifference`].
pub const FD_STEP: f64 = 1e-5;

/// Fidelity of a conditioned run is `A / P`: the overlap mass with the
/// labelled target over the mass left in the label block.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Terms {
    a: f64,
    p: f64,
}

impl Terms {
    fn fidelity(self) -> f64 {
        if self.p <= 0.0 {
            0.0
        } else {
            (self.a / self.p).clamp(0.0, 1.0)
        }
    }
}

fn block_mass(s: &QuantumState, k: usize, n_label: usize) -> f64 {
    let block = s.dim() >> n_label;
    s.amplitudes()[k * block..(k + 1) * block]
        .iter()
        .map(|z| z.norm_sqr())
        .sum()
}

fn terms(c: &CircuitSpec, params: &[f64], pair: &TrainingPair) -> Result<Terms> {
    let out: BranchEnsemble = execute(c, params, &pair.input, MeasurementMode::Ensemble, LabelPolicy::None)?;
    let mut t = Terms { a: 0.0, p: 0.0 };
    for br in out.branches() {
        t.a += br.probability * br.state.inner(&pair.target)?.norm_sqr();
        t.p += br.probability
            * match pair.label {
                Some(k) => block_mass(&br.state, k, c.n_label()),
                None => 1.0,
            };
    }
    Ok(t)
}

/// Fidelity of the ensemble output of `c` on `pair.input` against
/// `pair.target`, conditioned on the label block when the pair is labelled.
pub fn pair_fidelity(c: &CircuitSpec, params: &[f64], pair: &TrainingPair) -> Result<f64> {
    Ok(terms(c, params, pair)?.fidelity())
}

/// `1 − mean fidelity` over pairs that all run through circuit `c`.
pub fn pair_loss(c: &CircuitSpec, params: &[f64], pairs: &[&TrainingPair]) -> Result<f64> {
    if pairs.is_empty() {
        bail!(Config, "empty batch");
    }
    let mut sum = 0.0;
    for p in pairs {
        sum += pair_fidelity(c, params, p)?;
    }
    Ok(1.0 - sum / pairs.len() as f64)
}

/// Infidelity over a batch of clean vectors and steps. Pairs are drawn from
/// `rng`; `params[t - 1]` serves step `t` unless only one vector is given.
#[allow(clippy::too_many_arguments)]
pub fn infidelity_loss<R: Rng + ?Sized>(
    params: &[Vec<f64>],
    batch: &[(&[f64], usize, Option<usize>)],
    sched: &NoiseSchedule,
    ansatz: &AnsatzConfig,
    sampling: PairSampling,
    complex_noise: bool,
    rng: &mut R,
) -> Result<f64> {
    if batch.is_empty() {
        bail!(Config, "empty batch");
    }
    let c = build_circuit(ansatz)?;
    let mut sum = 0.0;
    for &(x0, t, label) in batch {
        let pair = draw_pair(
            x0,
            t,
            sched,
            sampling,
            complex_noise,
            label.map(|k| (k, ansatz.n_label)),
            rng,
        )?;
        let theta = if params.len() == 1 { &params[0] } else { &params[t - 1] };
        sum += pair_fidelity(&c, theta, &pair)?;
    }
    Ok(1.0 - sum / batch.len() as f64)
}

/// Gradient of [`pair_loss`] by the parameter-shift rule, with the loss at
/// `params` returned alongside. Each pair is evaluated at `params` and at the
/// two shifted points using the same noise draw, so shifts share randoms.
///
/// For labelled pairs the rule is applied to `A` and `P` separately and
/// combined by the quotient rule, since both are linear in the channel.
pub fn parameter_shift_grad(c: &CircuitSpec, params: &[f64], pairs: &[&TrainingPair]) -> Result<(f64, Vec<f64>)> {
    gradient(c, params, pairs, GradientMethod::ParameterShift)
}

/// Central finite differences of [`pair_loss`] with step [`FD_STEP`].
pub fn finite_difference_grad(c: &CircuitSpec, params: &[f64], pairs: &[&TrainingPair]) -> Result<(f64, Vec<f64>)> {
    gradient(c, params, pairs, GradientMethod::FiniteDifference)
}

pub fn gradient(
    c: &CircuitSpec,
    params: &[f64],
    pairs: &[&TrainingPair],
    method: GradientMethod,
) -> Result<(f64, Vec<f64>)> {
    if pairs.is_empty() {
        bail!(Config, "empty batch");
    }
    let scale = 1.0 / pairs.len() as f64;
    let mut grad = vec![0.0; params.len()];
    let mut fid_sum = 0.0;
    let mut shifted = params.to_vec();
    for pair in pairs {
        let base = terms(c, params, pair)?;
        fid_sum += base.fidelity();
        for j in 0..params.len() {
            let dfid = match method {
                GradientMethod::ParameterShift => {
                    shifted[j] = params[j] + std::f64::consts::FRAC_PI_2;
                    let plus = terms(c, &shifted, pair)?;
                    shifted[j] = params[j] - std::f64::consts::FRAC_PI_2;
                    let minus = terms(c, &shifted, pair)?;
                    let da = 0.5 * (plus.a - minus.a);
                    let dp = 0.5 * (plus.p - minus.p);
                    if base.p <= 0.0 {
                        0.0
                    } else {
                        (da * base.p - base.a * dp) / (base.p * base.p)
                    }
                }
                GradientMethod::FiniteDifference => {
                    shifted[j] = params[j] + FD_STEP;
                    let plus = terms(c, &shifted, pair)?.fidelity();
                    shifted[j] = params[j] - FD_STEP;
                    let minus = terms(c, &shifted, pair)?.fidelity();
                    (plus - minus) / (2.0 * FD_STEP)
                }
            };
            shifted[j] = params[j];
            grad[j] -= scale * dfid;
        }
    }
    Ok((1.0 - fid_sum * scale, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::oracle::branch_oracle;
    use crate::ansatz::{GateOp, Variant};
    use crate::rng::{normal_vector, seeded};
    use crate::statevec::{amplitude_encode, fidelity, Axis};
    use rand::Rng;

    fn rx_circuit() -> CircuitSpec {
        CircuitSpec::new(
            1,
            0,
            vec![GateOp::Rotation {
                qubit: 0,
                axis: Axis::X,
                param: 0,
            }],
        )
        .unwrap()
    }

    fn zero_pair() -> TrainingPair {
        TrainingPair {
            t: 1,
            label: None,
            input: QuantumState::zero(1),
            target: QuantumState::zero(1),
        }
    }

    #[test]
    fn single_rotation_gradient() {
        let c = rx_circuit();
        let pair = zero_pair();
        let (loss, g) = parameter_shift_grad(&c, &[std::f64::consts::FRAC_PI_2], &[&pair]).unwrap();
        assert!((loss - 0.5).abs() < 1e-12);
        assert!((g[0] - 0.5).abs() < 1e-12);
        let (loss, g) = parameter_shift_grad(&c, &[0.0], &[&pair]).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(g[0].abs() < 1e-12);
    }

    #[test]
    fn identity_and_orthogonal_targets() {
        let c = rx_circuit();
        let same = zero_pair();
        assert!(pair_loss(&c, &[0.0], &[&same]).unwrap().abs() < 1e-15);
        let orth = TrainingPair {
            target: QuantumState::basis(1, 1).unwrap(),
            ..zero_pair()
        };
        assert!((pair_loss(&c, &[0.0], &[&orth]).unwrap() - 1.0).abs() < 1e-15);
    }

    fn random_state(n: usize, rng: &mut impl Rng) -> QuantumState {
        amplitude_encode(&normal_vector(rng, 1 << n, true), true).unwrap()
    }

    #[test]
    fn loss_matches_exhaustive_branch_oracle() {
        let mut rng = seeded(11);
        let cfg = AnsatzConfig::reverse_bottleneck(3, 0, [1, 2, 1]);
        let c = build_circuit(&cfg).unwrap();
        let params: Vec<f64> = (0..c.param_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
        for _ in 0..5 {
            let pair = TrainingPair {
                t: 1,
                label: None,
                input: random_state(3, &mut rng),
                target: random_state(3, &mut rng),
            };
            let oracle: f64 = branch_oracle(&c, &params, &pair.input)
                .iter()
                .map(|b| b.probability * fidelity(&b.state, &pair.target).unwrap())
                .sum();
            let loss = pair_loss(&c, &params, &[&pair]).unwrap();
            assert!((loss - (1.0 - oracle)).abs() < 1e-12);
        }
    }

    fn check_against_fd(cfg: &AnsatzConfig, labelled: bool, seed: u64) {
        let mut rng = seeded(seed);
        let c = build_circuit(cfg).unwrap();
        let params: Vec<f64> = (0..c.param_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let n = cfg.n_data;
        let pairs: Vec<TrainingPair> = (0..2)
            .map(|i| {
                let label = labelled.then_some(i % 2);
                let wrap = |s: QuantumState| match label {
                    Some(k) => crate::statevec::tensor_label(&s, k, cfg.n_label).unwrap(),
                    None => s,
                };
                TrainingPair {
                    t: 1,
                    label,
                    input: wrap(random_state(n, &mut rng)),
                    target: wrap(random_state(n, &mut rng)),
                }
            })
            .collect();
        let refs: Vec<&TrainingPair> = pairs.iter().collect();
        let (l1, ps) = parameter_shift_grad(&c, &params, &refs).unwrap();
        let (l2, fd) = finite_difference_grad(&c, &params, &refs).unwrap();
        assert_eq!(l1, l2);
        for (a, b) in ps.iter().zip(&fd) {
            if a.abs() > 1e-8 {
                assert!(((a - b) / a).abs() <= 1e-5, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn shift_rule_matches_finite_differences() {
        check_against_fd(&AnsatzConfig::reverse_bottleneck(3, 0, [2, 2, 2]), false, 21);
    }

    #[test]
    fn quotient_rule_matches_finite_differences() {
        check_against_fd(&AnsatzConfig::reverse_bottleneck(2, 1, [1, 1, 1]), true, 22);
        let mut cfg = AnsatzConfig::reverse_bottleneck(2, 1, [1, 1, 1]);
        cfg.variant = Variant::Bottleneck;
        check_against_fd(&cfg, true, 23);
    }

    #[test]
    fn loss_is_bounded() {
        let mut rng = seeded(31);
        let cfg = AnsatzConfig::reverse_bottleneck(2, 1, [1, 1, 1]);
        let sched = super::super::default_schedule(8).unwrap();
        let c = build_circuit(&cfg).unwrap();
        for _ in 0..20 {
            let params = vec![(0..c.param_count())
                .map(|_| rng.random_range(-3.0..3.0))
                .collect::<Vec<f64>>()];
            let x: Vec<f64> = {
                let v: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
                let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.iter().map(|a| a / n).collect()
            };
            let t = rng.random_range(1..=8);
            let l = infidelity_loss(
                &params,
                &[(&x, t, Some(1))],
                &sched,
                &cfg,
                PairSampling::Independent,
                true,
                &mut rng,
            )
            .unwrap();
            assert!((0.0..=1.0).contains(&l));
        }
    }
}
