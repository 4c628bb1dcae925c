use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NoiseSchedule;
use crate::error::{bail, Result};
use crate::rng::normal_vector;
use crate::statevec::{amplitude_encode, tensor_label, QuantumState};

const X0_NORM_TOL: f64 = 1e-6;

fn check_unit(x0: &[f64]) -> Result<()> {
    let norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > X0_NORM_TOL {
        bail!(Norm, "clean vector has norm {norm}, expected 1");
    }
    Ok(())
}

fn check_step(t: usize, sched: &NoiseSchedule) -> Result<()> {
    if t > sched.steps() {
        bail!(Config, "step {t} beyond schedule length {}", sched.steps());
    }
    Ok(())
}

fn mix(x0: &[f64], eps: &[Complex64], alpha_bar: f64) -> Vec<Complex64> {
    let (a, b) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    x0.iter().zip(eps).map(|(&x, &e)| a * x + b * e).collect()
}

fn normalized(v: Vec<Complex64>) -> Vec<Complex64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Closed-form draw of `x_t` given `x0`, renormalized to unit length.
pub fn forward_noise<R: Rng + ?Sized>(
    x0: &[f64],
    t: usize,
    sched: &NoiseSchedule,
    rng: &mut R,
    complex_noise: bool,
) -> Result<Vec<Complex64>> {
    check_unit(x0)?;
    check_step(t, sched)?;
    if sched.alpha_bar(t) == 1.0 {
        return Ok(x0.iter().map(|&x| Complex64::new(x, 0.0)).collect());
    }
    let eps = normal_vector(rng, x0.len(), complex_noise);
    Ok(normalized(mix(x0, &eps, sched.alpha_bar(t))))
}

/// How the input `x_t` and target `x_{t-1}` of a training pair are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSampling {
    /// Both levels from the closed form with separate noise draws.
    #[default]
    Independent,
    /// `x_{t-1}` from the closed form, then one Markov step to `x_t`.
    Coupled,
    /// Both levels from the closed form with one shared noise draw.
    SharedNoise,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub t: usize,
    pub label: Option<usize>,
    /// `|x_t⟩`, label register prepended when conditioned.
    pub input: QuantumState,
    /// `|x_{t-1}⟩`, same layout as `input`.
    pub target: QuantumState,
}

fn encode(v: Vec<Complex64>, label: Option<(usize, usize)>) -> Result<QuantumState> {
    let s = amplitude_encode(&normalized(v), false)?;
    match label {
        Some((k, n_label)) => tensor_label(&s, k, n_label),
        None => Ok(s),
    }
}

/// Draws `(x_t, x_{t-1})` for one clean vector. `label` is `(k, n_label)`.
pub fn draw_pair<R: Rng + ?Sized>(
    x0: &[f64],
    t: usize,
    sched: &NoiseSchedule,
    sampling: PairSampling,
    complex_noise: bool,
    label: Option<(usize, usize)>,
    rng: &mut R,
) -> Result<TrainingPair> {
    check_unit(x0)?;
    check_step(t, sched)?;
    if t == 0 {
        bail!(Config, "training pairs start at step 1");
    }
    let clean: Vec<Complex64> = x0.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let (input, target) = match sampling {
        PairSampling::Independent => {
            let prev = if t == 1 {
                clean
            } else {
                let eps = normal_vector(rng, x0.len(), complex_noise);
                mix(x0, &eps, sched.alpha_bar(t - 1))
            };
            let eps = normal_vector(rng, x0.len(), complex_noise);
            (mix(x0, &eps, sched.alpha_bar(t)), prev)
        }
        PairSampling::Coupled => {
            let prev = if t == 1 {
                clean
            } else {
                let eps = normal_vector(rng, x0.len(), complex_noise);
                mix(x0, &eps, sched.alpha_bar(t - 1))
            };
            let eps = normal_vector(rng, x0.len(), complex_noise);
            let (a, b) = ((1.0 - sched.beta(t)).sqrt(), sched.beta(t).sqrt());
            let next = prev.iter().zip(&eps).map(|(&p, &e)| a * p + b * e).collect();
            (next, prev)
        }
        PairSampling::SharedNoise => {
            let eps = normal_vector(rng, x0.len(), complex_noise);
            (mix(x0, &eps, sched.alpha_bar(t)), mix(x0, &eps, sched.alpha_bar(t - 1)))
        }
    };
    Ok(TrainingPair {
        t,
        label: label.map(|l| l.0),
        input: encode(input, label)?,
        target: encode(target, label)?,
    })
}
