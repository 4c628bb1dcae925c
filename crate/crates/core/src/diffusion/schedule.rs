use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{bail, Result};

/// Default linear endpoints. Both `T = 8` and `T = 15` end below `ᾱ_T = 0.01`.
pub const DEFAULT_BETA_START: f64 = 0.05;
pub const DEFAULT_BETA_END: f64 = 0.8;

/// Variance schedule `β_t` with `α_t = 1 − β_t` and `ᾱ_t = Π_{s≤t} α_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if let Some(b) = betas.iter().find(|&&b| !(b > 0.0 && b < 1.0)) {
            bail!(Config, "beta {b} outside (0, 1)");
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut acc = 1.0;
        let alpha_bars = alphas
            .iter()
            .map(|a| {
                acc *= a;
                acc
            })
            .collect();
        Ok(Self {
            betas,
            alphas,
            alpha_bars,
        })
    }

    /// Number of denoising steps `T`.
    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    /// `ᾱ_t` for `t ∈ 0..=T`, with `ᾱ_0 = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }
}

/// `T` betas spaced linearly from `beta_start` to `beta_end` inclusive.
pub fn make_linear_schedule(steps: usize, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
    if steps == 0 {
        bail!(Config, "schedule needs at least one step");
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        bail!(
            Config,
            "need 0 < beta_start ≤ beta_end < 1, got {beta_start}, {beta_end}"
        );
    }
    let betas = if steps == 1 {
        vec![beta_start]
    } else {
        (0..steps)
            .map(|i| beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    NoiseSchedule::from_betas(betas)
}

pub fn default_schedule(steps: usize) -> Result<NoiseSchedule> {
    make_linear_schedule(steps, DEFAULT_BETA_START, DEFAULT_BETA_END)
}

#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    betas: Vec<f64>,
}

impl Serialize for NoiseSchedule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ScheduleRepr {
            betas: self.betas.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NoiseSchedule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = ScheduleRepr::deserialize(d)?;
        NoiseSchedule::from_betas(repr.betas).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_and_double_step() {
        let s = make_linear_schedule(1, 0.5, 0.5).unwrap();
        assert_eq!(s.alpha_bar(1), 0.5);
        let s = make_linear_schedule(2, 0.5, 0.5).unwrap();
        assert_eq!(s.alpha_bar(2), 0.25);
    }

    #[test]
    fn defaults_reach_noise() {
        for t in [8, 15] {
            let s = default_schedule(t).unwrap();
            // independent product over the betas as listed
            let prod: f64 = s.betas().iter().map(|b| 1.0 - b).product();
            assert!((s.alpha_bar(t) - prod).abs() < 1e-12);
            assert!(s.alpha_bar(t) <= 0.01, "T={t}: {}", s.alpha_bar(t));
            for w in s.alpha_bars().windows(2) {
                assert!(w[1] < w[0]);
            }
        }
    }

    #[test]
    fn range_violations() {
        assert!(make_linear_schedule(0, 0.1, 0.2).is_err());
        assert!(make_linear_schedule(3, 0.0, 0.2).is_err());
        assert!(make_linear_schedule(3, 0.3, 0.2).is_err());
        assert!(make_linear_schedule(3, 0.1, 1.0).is_err());
    }

    #[test]
    fn schedule_serializes_as_betas() {
        let s = make_linear_schedule(3, 0.1, 0.3).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.starts_with("{\"betas\":["));
        let back: NoiseSchedule = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
