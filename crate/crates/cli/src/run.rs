//! Run directory layout and the artifacts commands hand to each other.
//!
//! ```text
//! <run-dir>/
//!   config.json          resolved configuration
//!   autoencoder.json     latent models only
//!   checkpoint.json
//!   samples/             PGM images and a CSV of generated vectors
//!   metrics/             CSV reports
//!   plots/               SVG scatter plots
//!   qasm/                OpenQASM 2.0 circuits
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use qdiffusion::data::{filter_digits, load_mnist, to_unit_vector, Dataset, Split};
use qdiffusion::latent::AutoencoderParams;
use qdiffusion::Checkpoint;

use crate::config::RunConfig;
use crate::error::CliError;

pub const DATA_DIR_ENV: &str = "QDM_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = "data/mnist";

pub struct Context {
    pub cfg: RunConfig,
    pub run_dir: PathBuf,
    pub data_dir: PathBuf,
}

impl Context {
    pub fn new(cfg: RunConfig, run_dir: PathBuf, data_dir: PathBuf) -> Self {
        Self { cfg, run_dir, data_dir }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.run_dir.join(rel)
    }

    /// Creates `<run-dir>/<name>` and returns it.
    pub fn subdir(&self, name: &str) -> Result<PathBuf, CliError> {
        let d = self.run_dir.join(name);
        fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
        Ok(d)
    }

    pub fn write_config(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.run_dir).with_context(|| format!("creating {}", self.run_dir.display()))?;
        let mut text = serde_json::to_string_pretty(&self.cfg).context("serializing config")?;
        text.push('\n');
        fs::write(self.path("config.json"), text).context("writing config.json")?;
        Ok(())
    }

    fn split(&self, split: Split) -> Result<Dataset, CliError> {
        let prefix = match split {
            Split::Train => "train",
            Split::Test => "t10k",
        };
        for kind in ["images-idx3", "labels-idx1"] {
            let f = self.data_dir.join(format!("{prefix}-{kind}-ubyte"));
            if !f.is_file() {
                return Err(CliError::Missing(format!("MNIST file {} not found", f.display())));
            }
        }
        let ds = load_mnist(&self.data_dir, split)?;
        let ds = filter_digits(&ds, &self.cfg.classes());
        let limit = match split {
            Split::Train => self.cfg.data.train_images,
            Split::Test => self.cfg.data.test_images,
        };
        let ds = ds.take(limit);
        if ds.is_empty() {
            return Err(CliError::Missing(format!(
                "no images of the selected digits in {}",
                self.data_dir.display()
            )));
        }
        Ok(if self.cfg.data.downsample {
            ds.downsampled()?
        } else {
            ds
        })
    }

    pub fn train_set(&self) -> Result<Dataset, CliError> {
        self.split(Split::Train)
    }

    pub fn test_set(&self) -> Result<Dataset, CliError> {
        self.split(Split::Test)
    }

    fn existing(&self, explicit: &Option<PathBuf>, default: &str, what: &str, hint: &str) -> Result<PathBuf, CliError> {
        let p = explicit.clone().unwrap_or_else(|| self.path(default));
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::Missing(format!("{what} {} not found; {hint}", p.display())))
        }
    }

    /// The autoencoder, for latent models.
    pub fn autoencoder(&self) -> Result<Option<AutoencoderParams>, CliError> {
        if self.cfg.autoencoder.is_none() {
            return Ok(None);
        }
        let p = self.existing(
            &self.cfg.paths.autoencoder,
            "autoencoder.json",
            "autoencoder",
            "run train-ae first",
        )?;
        let ae = AutoencoderParams::load(&p).with_context(|| format!("loading {}", p.display()))?;
        if ae.latent_dim() != 1 << self.cfg.model.ansatz.n_data {
            return Err(CliError::Config(format!(
                "autoencoder latent dimension {} does not match the model",
                ae.latent_dim()
            )));
        }
        Ok(Some(ae))
    }

    pub fn checkpoint(&self) -> Result<Checkpoint, CliError> {
        let p = self.existing(
            &self.cfg.paths.checkpoint,
            "checkpoint.json",
            "checkpoint",
            "run train-qdm first",
        )?;
        Ok(Checkpoint::load(&p).with_context(|| format!("loading {}", p.display()))?)
    }

    pub fn checkpoint_if_present(&self) -> Result<Option<Checkpoint>, CliError> {
        match self.checkpoint() {
            Ok(c) => Ok(Some(c)),
            Err(CliError::Missing(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// Unit-norm vectors the diffusion model operates on: latents for latent
/// models, normalized pixels otherwise.
pub fn features(ae: Option<&AutoencoderParams>, images: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CliError> {
    Ok(match ae {
        Some(ae) => ae.encode_batch(images)?,
        None => images.iter().map(|i| to_unit_vector(i)).collect::<Result<_, _>>()?,
    })
}

/// Generated vectors back to displayable `[0, 1]` images.
pub fn to_images(ae: Option<&AutoencoderParams>, vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CliError> {
    Ok(match ae {
        Some(ae) => ae.decode_batch(vectors)?,
        None => vectors
            .iter()
            .map(|v| {
                let peak = v.iter().copied().fold(0.0, f64::max);
                v.iter().map(|x| if peak > 0.0 { x / peak } else { 0.0 }).collect()
            })
            .collect(),
    })
}

pub fn image_side(len: usize) -> usize {
    (len as f64).sqrt().round() as usize
}

pub fn relative(base: &Path, p: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).display().to_string()
}
