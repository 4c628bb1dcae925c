use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::nn::{adam_layers, sigmoid, Activation, Dense};
use crate::optim::{AdamConfig, AdamState};
use crate::rng::derive;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            epochs: 8,
            batch_size: 32,
            learning_rate: 3e-3,
            seed: 0,
        }
    }
}

/// One-vs-rest detector for a single digit: one tanh hidden layer and a
/// logistic output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryClassifier {
    pub digit: u8,
    pub hidden: Dense,
    pub output: Dense,
}

impl BinaryClassifier {
    /// Logit of "image shows `digit`".
    pub fn score(&self, image: &[f64]) -> f64 {
        let h = self.hidden.forward(image);
        self.output.forward(&h.a).a[0]
    }

    pub fn probability(&self, image: &[f64]) -> f64 {
        sigmoid(self.score(image))
    }
}

/// Trains on `images` with targets `labels == digit` under logistic loss.
pub fn train_binary_classifier(
    digit: u8,
    images: &[Vec<f64>],
    labels: &[u8],
    cfg: &ClassifierConfig,
) -> Result<BinaryClassifier> {
    if images.len() != labels.len() || images.is_empty() {
        bail!(Config, "{} images with {} labels", images.len(), labels.len());
    }
    if !labels.contains(&digit) || labels.iter().all(|&l| l == digit) {
        bail!(Config, "training set needs positive and negative examples of {digit}");
    }
    if cfg.hidden == 0 || cfg.batch_size == 0 || cfg.learning_rate <= 0.0 {
        bail!(Config, "classifier needs hidden ≥ 1, batch_size ≥ 1, learning_rate > 0");
    }
    let d = images[0].len();
    if images.iter().any(|im| im.len() != d) {
        bail!(Config, "images of differing size");
    }
    let mut rng = derive(cfg.seed, 0);
    let mut hidden = Dense::init(d, cfg.hidden, Activation::Tanh, &mut rng);
    let mut output = Dense::init(cfg.hidden, 1, Activation::Identity, &mut rng);
    let adam = AdamConfig::with_lr(cfg.learning_rate);
    let mut states = [AdamState::new(hidden.param_len()), AdamState::new(output.param_len())];
    let mut order: Vec<usize> = (0..images.len()).collect();
    let split = hidden.param_len();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let mut grad = vec![0.0; split + output.param_len()];
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let x = &images[i];
                let h = hidden.forward(x);
                let o = output.forward(&h.a);
                let y = f64::from(u8::from(labels[i] == digit));
                let d_logit = (sigmoid(o.a[0]) - y) * scale;
                let (gh, go) = grad.split_at_mut(split);
                let dh = output.backward(&h.a, &o, &[d_logit], go);
                hidden.backward(x, &h, &dh, gh);
            }
            adam_layers(&mut [&mut hidden, &mut output], &grad, &mut states, &adam);
        }
    }
    if !(hidden.is_finite() && output.is_finite()) {
        bail!(Stat, "classifier training diverged");
    }
    Ok(BinaryClassifier { digit, hidden, output })
}

/// Fraction of images classified correctly at threshold logit 0.
pub fn accuracy(c: &BinaryClassifier, images: &[Vec<f64>], labels: &[u8]) -> f64 {
    let correct = images
        .iter()
        .zip(labels)
        .filter(|(im, &l)| (c.score(im) > 0.0) == (l == c.digit))
        .count();
    correct as f64 / images.len().max(1) as f64
}
