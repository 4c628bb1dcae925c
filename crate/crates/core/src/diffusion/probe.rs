use super::{decode_data, denoise_chain, measured_qubits, prior_state, Checkpoint, SampleOptions, SampleStats};
use crate::error::{bail, Result};
use crate::rng::derive;

/// One row of a variability sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRow {
    /// Ancilla measurements along one full chain.
    pub measurements: usize,
    /// Mean pairwise L2 distance among decoded samples.
    pub mean_distance: f64,
}

pub fn mean_pairwise_distance(samples: &[Vec<f64>]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += samples[i]
                .iter()
                .zip(&samples[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

/// Samples every checkpoint from the same `draws` prior states and reports
/// the spread of the decoded outputs. Measurement outcomes use a stream
/// separate from the prior draws, shared across checkpoints.
pub fn variability_probe(
    checkpoints: &[Checkpoint],
    draws: usize,
    label: Option<usize>,
    seed: u64,
) -> Result<Vec<ProbeRow>> {
    if draws < 2 {
        bail!(Config, "variability needs at least two prior draws");
    }
    let mut rows = Vec::with_capacity(checkpoints.len());
    for ck in checkpoints {
        let circuit = ck.circuit()?;
        let mut prior_rng = derive(seed, 0);
        let mut meas_rng = derive(seed, 1);
        let mut opts = SampleOptions::new(draws);
        opts.label = label;
        let mut samples = Vec::with_capacity(draws);
        for _ in 0..draws {
            let prior = prior_state(ck, label, &mut prior_rng)?;
            let out = denoise_chain(ck, &circuit, prior, &opts, &mut meas_rng, &mut SampleStats::default())?;
            samples.push(decode_data(&out, ck.config.ansatz.n_label));
        }
        rows.push(ProbeRow {
            measurements: measured_qubits(&circuit) * ck.steps(),
            mean_distance: mean_pairwise_distance(&samples),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{execute, LabelPolicy, MeasurementMode};
    use crate::ansatz::{AnsatzConfig, Variant};
    use crate::diffusion::{init_params, make_linear_schedule, TrainingConfig};
    use crate::rng::normal_vector;
    use crate::statevec::{amplitude_encode, QuantumState};

    fn model(variant: Variant, m: usize) -> Checkpoint {
        let mut a = AnsatzConfig::reverse_bottleneck(2, 0, [1, 1, 1]);
        a.variant = variant;
        a.m = m;
        let mut cfg = TrainingConfig::new(make_linear_schedule(2, 0.1, 0.3).unwrap(), a);
        cfg.seed = 8;
        let p = init_params(&cfg).unwrap();
        Checkpoint::new(cfg, p, vec![]).unwrap()
    }

    #[test]
    fn unitary_model_preserves_state_distances() {
        let ck = model(Variant::Plain, 0);
        let rows = variability_probe(&[ck.clone()], 6, None, 3).unwrap();
        assert_eq!(rows[0].measurements, 0);
        let c = ck.circuit().unwrap();
        let run = |s: &QuantumState| {
            let mut out = s.clone();
            for t in (1..=ck.steps()).rev() {
                out = execute(&c, ck.params_for(t), &out, MeasurementMode::Ensemble, LabelPolicy::None)
                    .unwrap()
                    .into_branches()
                    .remove(0)
                    .state;
            }
            out
        };
        let mut rng = derive(3, 0);
        let priors: Vec<_> = (0..6)
            .map(|_| amplitude_encode(&normal_vector(&mut rng, 4, true), true).unwrap())
            .collect();
        for a in &priors {
            for b in &priors {
                let before = a.inner(b).unwrap().norm();
                let after = run(a).inner(&run(b)).unwrap().norm();
                assert!((before - after).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicate_draws_contribute_nothing() {
        let s = vec![vec![0.6, 0.8], vec![0.6, 0.8], vec![0.6, 0.8]];
        assert_eq!(mean_pairwise_distance(&s), 0.0);
    }

    #[test]
    fn sweep_reports_measurement_counts() {
        let rows = variability_probe(
            &[model(Variant::Plain, 0), model(Variant::ReverseBottleneck, 1)],
            4,
            None,
            1,
        )
        .unwrap();
        assert_eq!(rows[0].measurements, 0);
        assert_eq!(rows[1].measurements, 2);
        assert!(rows.iter().all(|r| r.mean_distance > 0.0));
    }
}
