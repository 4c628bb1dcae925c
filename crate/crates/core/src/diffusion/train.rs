use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{draw_pair, gradient, Checkpoint, GradientMethod, NoiseSchedule, PairSampling, TrainingPair};
use crate::ansatz::{build_circuit, param_count, AnsatzConfig};
use crate::error::{bail, Result};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::rng::derive;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub schedule: NoiseSchedule,
    pub ansatz: AnsatzConfig,
    pub complex_noise: bool,
    pub share_params_across_t: bool,
    pub pair_sampling: PairSampling,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub gradient_method: GradientMethod,
}

impl TrainingConfig {
    pub fn new(schedule: NoiseSchedule, ansatz: AnsatzConfig) -> Self {
        Self {
            schedule,
            ansatz,
            complex_noise: true,
            share_params_across_t: false,
            pair_sampling: PairSampling::default(),
            batch_size: 8,
            epochs: 10,
            learning_rate: AdamConfig::default().lr,
            seed: 0,
            gradient_method: GradientMethod::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            bail!(Config, "batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            bail!(Config, "learning_rate must be positive, got {}", self.learning_rate);
        }
        self.ansatz.validate()
    }
}

/// A clean training vector with its optional class.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingItem {
    pub vector: Vec<f64>,
    pub label: Option<usize>,
}

impl TrainingItem {
    pub fn new(vector: Vec<f64>, label: Option<usize>) -> Self {
        Self { vector, label }
    }
}

/// Uniform draws in `[−π, π]` for every circuit.
pub fn init_params(cfg: &TrainingConfig) -> Result<Vec<Vec<f64>>> {
    let n = param_count(&cfg.ansatz)?;
    let steps = cfg.schedule.steps();
    let sets = if cfg.share_params_across_t { steps.min(1) } else { steps };
    let mut rng = derive(cfg.seed, 0);
    Ok((0..sets)
        .map(|_| (0..n).map(|_| rng.random_range(-PI..=PI)).collect())
        .collect())
}

fn check_data(data: &[TrainingItem], cfg: &TrainingConfig) -> Result<()> {
    if data.is_empty() {
        bail!(Config, "training set is empty");
    }
    let dim = 1usize << cfg.ansatz.n_data;
    for (i, item) in data.iter().enumerate() {
        if item.vector.len() != dim {
            bail!(
                Config,
                "item {i} has length {}, data register holds {dim}",
                item.vector.len()
            );
        }
        match (item.label, cfg.ansatz.n_label) {
            (Some(k), n) if k >= 1 << n => bail!(Config, "item {i} label {k} needs more than {n} label qubit(s)"),
            (None, n) if n > 0 => bail!(Config, "item {i} is unlabelled but the model is conditioned"),
            _ => {}
        }
    }
    Ok(())
}

pub fn train(data: &[TrainingItem], cfg: &TrainingConfig) -> Result<Checkpoint> {
    train_with(data, cfg, |_, _| {})
}

/// [`train`] with a callback receiving `(epoch, mean loss)` after each epoch.
pub fn train_with(
    data: &[TrainingItem],
    cfg: &TrainingConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<Checkpoint> {
    cfg.validate()?;
    check_data(data, cfg)?;
    let mut params = init_params(cfg)?;
    let mut history = Vec::with_capacity(cfg.epochs);
    if cfg.epochs == 0 {
        return Checkpoint::new(cfg.clone(), params, history);
    }
    let steps = cfg.schedule.steps();
    if steps == 0 {
        bail!(Config, "cannot train a zero-step schedule");
    }
    let circuit = build_circuit(&cfg.ansatz)?;
    let adam = AdamConfig::with_lr(cfg.learning_rate);
    let mut states: Vec<AdamState> = params.iter().map(|p| AdamState::new(p.len())).collect();
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..cfg.epochs {
        let mut rng = derive(cfg.seed, 1 + epoch as u64);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let mut groups: Vec<Vec<TrainingPair>> = vec![Vec::new(); params.len()];
            for &i in chunk {
                let item = &data[i];
                let t = rng.random_range(1..=steps);
                let label = item.label.map(|k| (k, cfg.ansatz.n_label));
                let pair = draw_pair(
                    &item.vector,
                    t,
                    &cfg.schedule,
                    cfg.pair_sampling,
                    cfg.complex_noise,
                    label,
                    &mut rng,
                )?;
                let g = if cfg.share_params_across_t { 0 } else { t - 1 };
                groups[g].push(pair);
            }
            for (g, pairs) in groups.iter().enumerate() {
                if pairs.is_empty() {
                    continue;
                }
                let refs: Vec<&TrainingPair> = pairs.iter().collect();
                let (loss, mut grad) = gradient(&circuit, &params[g], &refs, cfg.gradient_method)?;
                let weight = pairs.len() as f64 / chunk.len() as f64;
                grad.iter_mut().for_each(|d| *d *= weight);
                loss_sum += loss * pairs.len() as f64;
                adam_step(&mut params[g], &grad, &mut states[g], &adam);
            }
        }
        let mean = loss_sum / data.len() as f64;
        history.push(mean);
        on_epoch(epoch, mean);
    }
    Checkpoint::new(cfg.clone(), params, history)
}
