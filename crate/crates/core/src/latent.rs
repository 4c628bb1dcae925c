//! Dense autoencoder whose latents are nonnegative unit vectors, ready for
//! amplitude encoding without renormalization.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::nn::{adam_layers, Activation, Dense, Trace};
use crate::optim::{AdamConfig, AdamState};
use crate::rng::derive;

pub const AE_FORMAT_VERSION: u32 = 1;
const AE_KIND: &str = "autoencoder";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AeConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub latent_dim: usize,
    /// Hidden-layer activation, `tanh` or `relu`.
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self {
            input_dim: 784,
            hidden: 128,
            latent_dim: 8,
            activation: Activation::Tanh,
            learning_rate: 1e-3,
            epochs: 10,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl AeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.latent_dim == 0 {
            bail!(Config, "autoencoder layer sizes must be positive");
        }
        if !matches!(self.activation, Activation::Tanh | Activation::Relu) {
            bail!(Config, "hidden activation must be tanh or relu");
        }
        if self.batch_size == 0 || !(self.learning_rate > 0.0) {
            bail!(Config, "autoencoder needs batch_size ≥ 1 and learning_rate > 0");
        }
        Ok(())
    }
}

/// Encoder `input → hidden → latent` (softplus, then L2 normalization) and
/// decoder `latent → hidden → input` (sigmoid output).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderParams {
    pub format_version: u32,
    pub kind: String,
    pub config: AeConfig,
    pub enc_hidden: Dense,
    pub enc_latent: Dense,
    pub dec_hidden: Dense,
    pub dec_output: Dense,
    #[serde(serialize_with = "crate::format::f64_17::vec")]
    pub loss_history: Vec<f64>,
}

struct Pass {
    h1: Trace,
    s: Trace,
    norm: f64,
    latent: Vec<f64>,
    h2: Trace,
    out: Trace,
}

fn normalize(s: &[f64]) -> (Vec<f64>, f64) {
    let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    (s.iter().map(|v| v / norm).collect(), norm)
}

impl AutoencoderParams {
    pub fn init(cfg: &AeConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = derive(cfg.seed, 0);
        Ok(Self {
            format_version: AE_FORMAT_VERSION,
            kind: AE_KIND.to_string(),
            enc_hidden: Dense::init(cfg.input_dim, cfg.hidden, cfg.activation, &mut rng),
            enc_latent: Dense::init(cfg.hidden, cfg.latent_dim, Activation::Softplus, &mut rng),
            dec_hidden: Dense::init(cfg.latent_dim, cfg.hidden, cfg.activation, &mut rng),
            dec_output: Dense::init(cfg.hidden, cfg.input_dim, Activation::Sigmoid, &mut rng),
            config: cfg.clone(),
            loss_history: Vec::new(),
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    fn pass(&self, x: &[f64]) -> Pass {
        let h1 = self.enc_hidden.forward(x);
        let s = self.enc_latent.forward(&h1.a);
        let (latent, norm) = normalize(&s.a);
        let h2 = self.dec_hidden.forward(&latent);
        let out = self.dec_output.forward(&h2.a);
        Pass {
            h1,
            s,
            norm,
            latent,
            h2,
            out,
        }
    }

    fn layers_mut(&mut self) -> [&mut Dense; 4] {
        [
            &mut self.enc_hidden,
            &mut self.enc_latent,
            &mut self.dec_hidden,
            &mut self.dec_output,
        ]
    }

    fn param_lens(&self) -> [usize; 4] {
        [
            self.enc_hidden.param_len(),
            self.enc_latent.param_len(),
            self.dec_hidden.param_len(),
            self.dec_output.param_len(),
        ]
    }

    /// Accumulates `∂L/∂θ` of `scale · MSE(x)` into `grad`; returns the MSE.
    fn backprop(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let p = self.pass(x);
        let n = x.len() as f64;
        let mse = p.out.a.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
        let d_out: Vec<f64> = p.out.a.iter().zip(x).map(|(a, b)| scale * 2.0 * (a - b) / n).collect();
        let lens = self.param_lens();
        let (g0, rest) = grad.split_at_mut(lens[0]);
        let (g1, rest) = rest.split_at_mut(lens[1]);
        let (g2, g3) = rest.split_at_mut(lens[2]);
        let d_h2 = self.dec_output.backward(&p.h2.a, &p.out, &d_out, g3);
        let d_latent = self.dec_hidden.backward(&p.latent, &p.h2, &d_h2, g2);
        // through y = s / ‖s‖
        let dot: f64 = d_latent.iter().zip(&p.latent).map(|(g, y)| g * y).sum();
        let d_s: Vec<f64> = d_latent
            .iter()
            .zip(&p.latent)
            .map(|(g, y)| (g - y * dot) / p.norm)
            .collect();
        let d_h1 = self.enc_latent.backward(&p.h1.a, &p.s, &d_s, g1);
        self.enc_hidden.backward(x, &p.h1, &d_h1, g0);
        mse
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.input_dim {
            bail!(
                Shape,
                "input of length {}, autoencoder expects {}",
                x.len(),
                self.config.input_dim
            );
        }
        Ok(())
    }

    /// `(latent, reconstruction)` for one image.
    pub fn forward(&self, image: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(image)?;
        let p = self.pass(image);
        Ok((p.latent, p.out.a))
    }

    pub fn encode(&self, image: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(image)?.0)
    }

    pub fn decode(&self, latent: &[f64]) -> Result<Vec<f64>> {
        if latent.len() != self.config.latent_dim {
            bail!(
                Shape,
                "latent of length {}, decoder expects {}",
                latent.len(),
                self.config.latent_dim
            );
        }
        let h = self.dec_hidden.forward(latent);
        Ok(self
            .dec_output
            .forward(&h.a)
            .a
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect())
    }

    pub fn encode_batch(&self, images: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        images.iter().map(|im| self.encode(im)).collect()
    }

    pub fn decode_batch(&self, latents: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        latents.iter().map(|z| self.decode(z)).collect()
    }

    /// Mean per-pixel squared reconstruction error.
    pub fn mse(&self, images: &[Vec<f64>]) -> Result<f64> {
        let mut total = 0.0;
        for im in images {
            let (_, rec) = self.forward(im)?;
            total += rec.iter().zip(im).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / im.len() as f64;
        }
        Ok(total / images.len().max(1) as f64)
    }

    /// Flat gradient of the mean MSE over `images`, layer order
    /// encoder-hidden, encoder-latent, decoder-hidden, decoder-output, each
    /// weights then bias.
    pub fn gradient(&self, images: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.param_lens().iter().sum()];
        let scale = 1.0 / images.len().max(1) as f64;
        let mut loss = 0.0;
        for im in images {
            self.check_input(im)?;
            loss += scale * self.backprop(im, scale, &mut grad);
        }
        Ok((loss, grad))
    }

    pub fn is_finite(&self) -> bool {
        self.enc_hidden.is_finite()
            && self.enc_latent.is_finite()
            && self.dec_hidden.is_finite()
            && self.dec_output.is_finite()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: AutoencoderParams = serde_json::from_str(text)?;
        if p.format_version != AE_FORMAT_VERSION || p.kind != AE_KIND {
            bail!(Format, "not a version {AE_FORMAT_VERSION} autoencoder checkpoint");
        }
        let c = &p.config;
        let shapes = [
            (&p.enc_hidden, c.input_dim, c.hidden),
            (&p.enc_latent, c.hidden, c.latent_dim),
            (&p.dec_hidden, c.latent_dim, c.hidden),
            (&p.dec_output, c.hidden, c.input_dim),
        ];
        for (l, i, o) in shapes {
            if l.inputs != i || l.outputs != o || l.weights.len() != i * o || l.bias.len() != o {
                bail!(Format, "layer shape does not match the stored configuration");
            }
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

pub fn ae_train(images: &[Vec<f64>], cfg: &AeConfig) -> Result<AutoencoderParams> {
    ae_train_with(images, cfg, |_, _| {})
}

/// [`ae_train`] with a callback receiving `(epoch, mean MSE)`.
pub fn ae_train_with(
    images: &[Vec<f64>],
    cfg: &AeConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<AutoencoderParams> {
    if images.is_empty() {
        bail!(Config, "autoencoder training set is empty");
    }
    let mut p = AutoencoderParams::init(cfg)?;
    if let Some(bad) = images.iter().find(|im| im.len() != cfg.input_dim) {
        bail!(Config, "image of length {} for input_dim {}", bad.len(), cfg.input_dim);
    }
    let adam = AdamConfig::with_lr(cfg.learning_rate);
    let mut states: Vec<AdamState> = p.param_lens().iter().map(|&n| AdamState::new(n)).collect();
    let mut order: Vec<usize> = (0..images.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for epoch in 0..cfg.epochs {
        let mut rng = derive(cfg.seed, 1 + epoch as u64);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| images[i].clone()));
            let (loss, grad) = p.gradient(&batch)?;
            total += loss * chunk.len() as f64;
            adam_layers(&mut p.layers_mut(), &grad, &mut states, &adam);
        }
        if !p.is_finite() {
            bail!(Stat, "autoencoder training diverged in epoch {epoch}");
        }
        let mean = total / images.len() as f64;
        p.loss_history.push(mean);
        on_epoch(epoch, mean);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn small_cfg() -> AeConfig {
        AeConfig {
            input_dim: 12,
            hidden: 6,
            latent_dim: 4,
            epochs: 0,
            batch_size: 4,
            learning_rate: 1e-2,
            ..Default::default()
        }
    }

    fn images(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeded(seed);
        (0..n)
            .map(|i| {
                (0..d)
                    .map(|k| {
                        if (k + i) % 3 == 0 {
                            rng.random_range(0.5..1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn latents_are_nonnegative_unit_vectors() {
        let p = AutoencoderParams::init(&small_cfg()).unwrap();
        let mut rng = seeded(1);
        for _ in 0..50 {
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(-5.0..5.0)).collect();
            let (z, rec) = p.forward(&x).unwrap();
            assert!((z.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(z.iter().all(|v| *v >= 0.0));
            assert!(rec.iter().all(|v| (0.0..=1.0).contains(v)));
            crate::statevec::amplitude_encode_real(&z, false).unwrap();
        }
    }

    #[test]
    fn gradient_matches_finite_differences_on_every_layer() {
        for act in [Activation::Tanh, Activation::Relu] {
            let cfg = AeConfig {
                activation: act,
                ..small_cfg()
            };
            let p = AutoencoderParams::init(&cfg).unwrap();
            let xs = images(3, 12, 2);
            let (_, grad) = p.gradient(&xs).unwrap();
            let lens = p.param_lens();
            let h = 1e-5;
            let mut offset = 0;
            for (layer, &len) in lens.iter().enumerate() {
                for k in [0, len / 3, len - 1] {
                    let bump = |delta: f64| {
                        let mut q = p.clone();
                        let l = &mut q.layers_mut()[layer];
                        if k < l.weights.len() {
                            l.weights[k] += delta;
                        } else {
                            let nw = l.weights.len();
                            l.bias[k - nw] += delta;
                        }
                        q.gradient(&xs).unwrap().0
                    };
                    let fd = (bump(h) - bump(-h)) / (2.0 * h);
                    let an = grad[offset + k];
                    let denom = an.abs().max(fd.abs());
                    if denom > 1e-7 {
                        assert!(
                            ((fd - an) / denom).abs() <= 1e-4,
                            "{act:?} layer {layer} k {k}: {fd} vs {an}"
                        );
                    }
                }
                offset += len;
            }
        }
    }

    #[test]
    fn zero_epochs_and_determinism() {
        let xs = images(20, 12, 3);
        let p = ae_train(&xs, &small_cfg()).unwrap();
        assert_eq!(p, AutoencoderParams::init(&small_cfg()).unwrap());
        let cfg = AeConfig {
            epochs: 3,
            ..small_cfg()
        };
        let a = ae_train(&xs, &cfg).unwrap();
        let b = ae_train(&xs, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.loss_history[2] < a.loss_history[0]);
    }

    #[test]
    fn decode_accepts_one_hot_latents() {
        let p = AutoencoderParams::init(&small_cfg()).unwrap();
        let img = p.decode(&[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(img.len(), 12);
        assert!(img.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(matches!(p.decode(&[1.0]), Err(crate::Error::Shape(_))));
        assert!(matches!(p.encode(&[0.0; 3]), Err(crate::Error::Shape(_))));
    }

    #[test]
    fn json_round_trip() {
        let cfg = AeConfig {
            epochs: 1,
            ..small_cfg()
        };
        let p = ae_train(&images(8, 12, 4), &cfg).unwrap();
        let back = AutoencoderParams::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
