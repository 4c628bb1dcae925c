use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::Checkpoint;
use crate::ansatz::{
    execute_with, CircuitSpec, ExecOptions, GateOp, LabelPolicy, MeasureRole, MeasurementMode, NoiseModel,
};
use crate::error::{bail, Error, Result};
use crate::rng::normal_vector;
use crate::statevec::{amplitude_encode, tensor_label, QuantumState};

/// How ancilla measurements are handled while generating.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SampleMeasurement {
    /// Accept whatever outcome is drawn.
    #[default]
    Sample,
    /// Rerun a step until every ancilla reads `outcome`.
    BranchSelect { outcome: usize },
}

/// What happens to the label register at the end of each step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelHandling {
    #[default]
    Postselect,
    Restore,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOptions {
    pub count: usize,
    pub label: Option<usize>,
    pub measurement: SampleMeasurement,
    pub label_handling: LabelHandling,
    pub noise: NoiseModel,
    /// Reruns allowed per step under branch selection.
    pub max_attempts: usize,
}

impl SampleOptions {
    pub fn new(count: usize) -> Self {
        Self {
            count,
            label: None,
            measurement: SampleMeasurement::Sample,
            label_handling: LabelHandling::Postselect,
            noise: NoiseModel::default(),
            max_attempts: 1000,
        }
    }
}

/// Measurement bookkeeping across a sampling run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SampleStats {
    /// Ancilla measurements performed, including rejected ones.
    pub attempts: usize,
    /// Ancilla measurements whose outcome was kept.
    pub accepted: usize,
    /// Step reruns triggered by rejection.
    pub reruns: usize,
}

impl SampleStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            1.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOutput {
    /// Decoded nonnegative unit vectors over the data register.
    pub samples: Vec<Vec<f64>>,
    pub stats: SampleStats,
}

/// Ancilla qubits measured by one pass of `c`.
pub fn measured_qubits(c: &CircuitSpec) -> usize {
    c.ops()
        .iter()
        .map(|op| match op {
            GateOp::Measure {
                qubits,
                role: MeasureRole::Ancilla,
                ..
            } => qubits.len(),
            _ => 0,
        })
        .sum()
}

/// Square root of the data-register marginal: `|amplitude|` per data basis
/// state, summed over label values.
pub fn decode_data(s: &QuantumState, n_label: usize) -> Vec<f64> {
    let block = s.dim() >> n_label;
    let mut out = vec![0.0; block];
    for (i, z) in s.amplitudes().iter().enumerate() {
        out[i % block] += z.norm_sqr();
    }
    out.iter_mut().for_each(|v| *v = v.sqrt());
    out
}

fn run_step<R: RngCore>(
    c: &CircuitSpec,
    params: &[f64],
    input: &QuantumState,
    label: LabelPolicy,
    opts: &SampleOptions,
    rng: &mut R,
    stats: &mut SampleStats,
) -> Result<QuantumState> {
    for _ in 0..opts.max_attempts.max(1) {
        let mode = match opts.measurement {
            SampleMeasurement::Sample => MeasurementMode::Sample(&mut *rng),
            SampleMeasurement::BranchSelect { outcome } => MeasurementMode::BranchSelect {
                rng: &mut *rng,
                outcome,
            },
        };
        let exec = ExecOptions {
            mode,
            label,
            noise: opts.noise,
        };
        match execute_with(c, params, input, exec) {
            Ok(run) => {
                stats.attempts += run.ancilla_measurements;
                stats.accepted += run.ancilla_measurements;
                let mut branches = run.ensemble.into_branches();
                return Ok(branches.swap_remove(0).state);
            }
            Err(Error::Rejected { accepted }) => {
                stats.attempts += accepted + 1;
                stats.accepted += accepted;
                stats.reruns += 1;
            }
            Err(e) => return Err(e),
        }
    }
    bail!(
        Postselect,
        "branch selection failed {} times in a row",
        opts.max_attempts
    )
}

/// Runs the denoising chain `t = T..1` from an already prepared state.
pub fn denoise_chain<R: RngCore>(
    ck: &Checkpoint,
    circuit: &CircuitSpec,
    prior: QuantumState,
    opts: &SampleOptions,
    rng: &mut R,
    stats: &mut SampleStats,
) -> Result<QuantumState> {
    let label = match (opts.label, opts.label_handling) {
        (None, _) => LabelPolicy::None,
        (Some(k), LabelHandling::Postselect) => LabelPolicy::Postselect(k),
        (Some(k), LabelHandling::Restore) => LabelPolicy::Restore(k),
    };
    let mut state = prior;
    for t in (1..=ck.steps()).rev() {
        state = run_step(circuit, ck.params_for(t), &state, label, opts, rng, stats)?;
    }
    Ok(state)
}

/// Encoded prior draw `|x_T⟩`, with `|k⟩` prepended for conditioned models.
pub fn prior_state<R: RngCore>(ck: &Checkpoint, label: Option<usize>, rng: &mut R) -> Result<QuantumState> {
    let n_data = ck.config.ansatz.n_data;
    let n_label = ck.config.ansatz.n_label;
    let noise = normal_vector(rng, 1 << n_data, ck.config.complex_noise);
    let s = amplitude_encode(&noise, true)?;
    match (label, n_label) {
        (Some(k), n) if n > 0 => tensor_label(&s, k, n),
        (Some(_), _) => bail!(Label, "model has no label register"),
        (None, 0) => Ok(s),
        (None, _) => bail!(Label, "conditioned model needs a label"),
    }
}

/// Generates `opts.count` samples by running the full chain on prior draws.
pub fn sample<R: RngCore>(ck: &Checkpoint, opts: &SampleOptions, rng: &mut R) -> Result<SampleOutput> {
    if opts.count == 0 {
        bail!(Config, "sample count must be at least 1");
    }
    ck.validate()?;
    let circuit = ck.circuit()?;
    let n_label = ck.config.ansatz.n_label;
    let mut stats = SampleStats::default();
    let mut samples = Vec::with_capacity(opts.count);
    for _ in 0..opts.count {
        let prior = prior_state(ck, opts.label, rng)?;
        let out = denoise_chain(ck, &circuit, prior, opts, rng, &mut stats)?;
        samples.push(decode_data(&out, n_label));
    }
    Ok(SampleOutput { samples, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{param_count, AnsatzConfig};
    use crate::diffusion::{init_params, make_linear_schedule, NoiseSchedule, TrainingConfig};
    use crate::rng::seeded;

    fn untrained(n_label: usize, steps: usize) -> Checkpoint {
        let schedule = if steps == 0 {
            NoiseSchedule::from_betas(vec![]).unwrap()
        } else {
            make_linear_schedule(steps, 0.1, 0.5).unwrap()
        };
        let mut cfg = TrainingConfig::new(schedule, AnsatzConfig::reverse_bottleneck(2, n_label, [1, 1, 1]));
        cfg.seed = 17;
        let params = init_params(&cfg).unwrap();
        Checkpoint::new(cfg, params, vec![]).unwrap()
    }

    #[test]
    fn zero_step_chain_decodes_prior() {
        let ck = untrained(0, 0);
        let out = sample(&ck, &SampleOptions::new(3), &mut seeded(1)).unwrap();
        let mut rng = seeded(1);
        for s in &out.samples {
            let noise = normal_vector(&mut rng, 4, true);
            let norm = noise.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for (a, z) in s.iter().zip(&noise) {
                assert!((a - z.norm() / norm).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let ck = untrained(0, 3);
        let a = sample(&ck, &SampleOptions::new(5), &mut seeded(2)).unwrap();
        let b = sample(&ck, &SampleOptions::new(5), &mut seeded(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.stats.attempts, 15);
        for s in &a.samples {
            assert!(s.iter().all(|v| *v >= 0.0));
            assert!((s.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn branch_selection_rate_near_half() {
        let mut trials = SampleStats::default();
        let mut rng = seeded(3);
        let cfg = AnsatzConfig::reverse_bottleneck(2, 0, [1, 1, 1]);
        let n = param_count(&cfg).unwrap();
        use rand::Rng;
        for i in 0..1000 {
            // fresh random circuit per trial
            let mut tc = TrainingConfig::new(make_linear_schedule(1, 0.5, 0.5).unwrap(), cfg.clone());
            tc.seed = i;
            let params = vec![(0..n).map(|_| rng.random_range(-3.15..3.15)).collect()];
            let ck = Checkpoint::new(tc, params, vec![]).unwrap();
            let mut opts = SampleOptions::new(1);
            opts.measurement = SampleMeasurement::BranchSelect { outcome: 0 };
            let out = sample(&ck, &opts, &mut rng).unwrap();
            trials.attempts += out.stats.attempts;
            trials.accepted += out.stats.accepted;
        }
        let rate = trials.acceptance_rate();
        assert!((0.3..=0.7).contains(&rate), "{rate}");
    }

    #[test]
    fn conditioned_samples_stay_in_label_block() {
        let ck = untrained(1, 2);
        let circuit = ck.circuit().unwrap();
        let mut rng = seeded(4);
        for handling in [LabelHandling::Postselect, LabelHandling::Restore] {
            let mut opts = SampleOptions::new(1);
            opts.label = Some(1);
            opts.label_handling = handling;
            opts.measurement = SampleMeasurement::BranchSelect { outcome: 0 };
            let prior = prior_state(&ck, Some(1), &mut rng).unwrap();
            let out = denoise_chain(&ck, &circuit, prior, &opts, &mut rng, &mut SampleStats::default()).unwrap();
            let amps = out.amplitudes();
            assert!(amps[..4].iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn label_mismatch_errors() {
        let ck = untrained(0, 1);
        let mut opts = SampleOptions::new(1);
        opts.label = Some(0);
        assert!(matches!(sample(&ck, &opts, &mut seeded(0)), Err(Error::Label(_))));
        let ck = untrained(1, 1);
        assert!(matches!(
            sample(&ck, &SampleOptions::new(1), &mut seeded(0)),
            Err(Error::Label(_))
        ));
    }
}
