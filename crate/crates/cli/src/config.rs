//! Run configuration: named presets, JSON documents and dotted-path overrides.

use std::path::PathBuf;

use qdiffusion::ansatz::{hardware_config, label_qubits};
use qdiffusion::diffusion::{
    GradientMethod, LabelHandling, PairSampling, SampleMeasurement, DEFAULT_BETA_END, DEFAULT_BETA_START,
};
use qdiffusion::nn::Activation;
use qdiffusion::AnsatzConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    FullQuantum,
    Latent,
    LatentConditioned,
    Hardware,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::FullQuantum,
        Preset::Latent,
        Preset::LatentConditioned,
        Preset::Hardware,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::FullQuantum => "full_quantum",
            Preset::Latent => "latent",
            Preset::LatentConditioned => "latent_conditioned",
            Preset::Hardware => "hardware",
        }
    }

    pub fn parse(s: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub preset: Preset,
    pub seeds: Seeds,
    pub data: DataSection,
    /// Absent for models trained directly on images.
    pub autoencoder: Option<AeSection>,
    pub model: ModelSection,
    pub sampling: SamplingSection,
    pub evaluation: EvalSection,
    pub noise_study: NoiseSection,
    pub paths: PathsSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub autoencoder: u64,
    pub training: u64,
    pub sampling: u64,
    pub evaluation: u64,
    pub noise_study: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// MNIST IDX directory. Falls back to `QDM_DATA_DIR`, then `data/mnist`.
    pub dir: Option<PathBuf>,
    /// Digits kept, in class order. `None` keeps all ten.
    pub digits: Option<Vec<u8>>,
    /// Resample 28×28 images to 16×16 before use.
    pub downsample: bool,
    /// Training images read (after digit filtering).
    pub train_images: usize,
    /// Held-out images used as the reference set.
    pub test_images: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeSection {
    pub hidden: usize,
    pub latent_dim: usize,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub ansatz: AnsatzConfig,
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub complex_noise: bool,
    pub share_params_across_t: bool,
    pub pair_sampling: PairSampling,
    pub gradient_method: GradientMethod,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Training vectors drawn from the head of the training split.
    pub train_items: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub count: usize,
    /// Digit to condition on. Conditioned models cycle through every class
    /// when unset.
    pub label: Option<u8>,
    pub measurement: SampleMeasurement,
    pub label_handling: LabelHandling,
    pub max_attempts: usize,
    pub grid_columns: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub samples: usize,
    pub gmm_components: usize,
    /// Principal components used as features for image-space models.
    pub pca_features: usize,
    pub classifier_hidden: usize,
    pub classifier_epochs: usize,
    pub classifier_learning_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub shots: usize,
    pub depolarizing: Vec<f64>,
    pub readout: f64,
    pub label: Option<u8>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    /// Autoencoder to use instead of `<run-dir>/autoencoder.json`.
    pub autoencoder: Option<PathBuf>,
    /// Checkpoint to use instead of `<run-dir>/checkpoint.json`.
    pub checkpoint: Option<PathBuf>,
}

impl RunConfig {
    pub fn preset(p: Preset) -> RunConfig {
        let latent_ae = |latent_dim| AeSection {
            hidden: 128,
            latent_dim,
            activation: Activation::Tanh,
            learning_rate: 1e-3,
            epochs: 10,
            batch_size: 32,
        };
        let (ansatz, steps, digits, autoencoder) = match p {
            Preset::FullQuantum => (
                AnsatzConfig::reverse_bottleneck(8, 0, [30, 40, 30]),
                15,
                Some(vec![0, 1]),
                None,
            ),
            Preset::Latent => (
                AnsatzConfig::reverse_bottleneck(3, 0, [15, 20, 15]),
                8,
                None,
                Some(latent_ae(8)),
            ),
            Preset::LatentConditioned => (
                AnsatzConfig::reverse_bottleneck(3, 4, [15, 20, 15]),
                8,
                None,
                Some(latent_ae(8)),
            ),
            Preset::Hardware => (hardware_config(), 3, Some(vec![0, 1]), Some(latent_ae(4))),
        };
        let full = p == Preset::FullQuantum;
        RunConfig {
            schema_version: SCHEMA_VERSION,
            preset: p,
            seeds: Seeds {
                autoencoder: 1,
                training: 2,
                sampling: 3,
                evaluation: 4,
                noise_study: 5,
            },
            data: DataSection {
                dir: None,
                digits,
                downsample: full,
                train_images: 4000,
                test_images: 1000,
            },
            autoencoder,
            model: ModelSection {
                ansatz,
                steps,
                beta_start: DEFAULT_BETA_START,
                beta_end: DEFAULT_BETA_END,
                complex_noise: true,
                share_params_across_t: false,
                pair_sampling: PairSampling::SharedNoise,
                gradient_method: GradientMethod::ParameterShift,
                batch_size: 10,
                epochs: 10,
                learning_rate: 0.02,
                train_items: if full { 200 } else { 1000 },
            },
            sampling: SamplingSection {
                count: 16,
                label: None,
                measurement: SampleMeasurement::Sample,
                label_handling: if p == Preset::Hardware {
                    LabelHandling::Restore
                } else {
                    LabelHandling::Postselect
                },
                max_attempts: 1000,
                grid_columns: 8,
            },
            evaluation: EvalSection {
                samples: 1000,
                gmm_components: if digits_len(p) == 2 { 2 } else { 10 },
                pca_features: 16,
                classifier_hidden: 32,
                classifier_epochs: 8,
                classifier_learning_rate: 3e-3,
            },
            noise_study: NoiseSection {
                shots: 320_000,
                depolarizing: vec![0.001, 0.01, 0.05],
                readout: 0.0,
                label: (p == Preset::LatentConditioned || p == Preset::Hardware).then_some(0),
            },
            paths: PathsSection::default(),
        }
    }

    /// Digits in class order.
    pub fn classes(&self) -> Vec<u8> {
        self.data.digits.clone().unwrap_or_else(|| (0..10).collect())
    }

    pub fn conditioned(&self) -> bool {
        self.model.ansatz.n_label > 0
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let classes = self.classes();
        if classes.is_empty() || classes.iter().any(|&d| d > 9) {
            return fail("data.digits must list digits in 0..=9".into());
        }
        let mut sorted = classes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != classes.len() {
            return fail("data.digits contains duplicates".into());
        }
        if self.data.train_images == 0 || self.data.test_images == 0 {
            return fail("data.train_images and data.test_images must be positive".into());
        }
        let a = &self.model.ansatz;
        a.validate()
            .map_err(|e| CliError::Config(format!("model.ansatz: {e}")))?;
        let feature_dim = match (&self.autoencoder, self.data.downsample) {
            (Some(_), true) => return fail("latent models read full-size images; set data.downsample=false".into()),
            (Some(ae), false) => ae.latent_dim,
            (None, true) => 256,
            (None, false) => 784,
        };
        if feature_dim != 1 << a.n_data {
            return fail(format!(
                "feature dimension {feature_dim} does not match 2^{} amplitudes of model.ansatz.n_data",
                a.n_data
            ));
        }
        if a.n_label > 0 {
            if classes.iter().any(|&d| (d as usize) >= 1 << a.n_label) {
                return fail(format!(
                    "{} label qubit(s) cannot encode every digit in data.digits",
                    a.n_label
                ));
            }
            if a.n_label < label_qubits(classes.len()) {
                return fail("too few label qubits for the class count".into());
            }
        }
        let m = &self.model;
        if !(m.learning_rate > 0.0 && m.learning_rate.is_finite()) || m.batch_size == 0 || m.train_items == 0 {
            return fail("model needs learning_rate > 0, batch_size ≥ 1 and train_items ≥ 1".into());
        }
        if m.steps > 0 && !(0.0 < m.beta_start && m.beta_start <= m.beta_end && m.beta_end < 1.0) {
            return fail("schedule needs 0 < beta_start ≤ beta_end < 1".into());
        }
        if let Some(ae) = &self.autoencoder {
            if ae.hidden == 0 || ae.batch_size == 0 || !(ae.learning_rate > 0.0) {
                return fail("autoencoder needs hidden ≥ 1, batch_size ≥ 1 and learning_rate > 0".into());
            }
        }
        let s = &self.sampling;
        if s.count == 0 || s.grid_columns == 0 || s.max_attempts == 0 {
            return fail("sampling.count, grid_columns and max_attempts must be positive".into());
        }
        for (name, label) in [
            ("sampling.label", s.label),
            ("noise_study.label", self.noise_study.label),
        ] {
            match label {
                Some(k) if !self.conditioned() => return fail(format!("{name} = {k} set for an unconditioned model")),
                Some(k) if !classes.contains(&k) => return fail(format!("{name} = {k} is not in data.digits")),
                _ => {}
            }
        }
        let e = &self.evaluation;
        if e.samples < 2 || e.gmm_components == 0 || e.pca_features == 0 || e.classifier_hidden == 0 {
            return fail(
                "evaluation needs samples ≥ 2 and positive gmm_components, pca_features, classifier_hidden".into(),
            );
        }
        let n = &self.noise_study;
        if n.shots == 0 {
            return fail("noise_study.shots must be positive".into());
        }
        if n.depolarizing
            .iter()
            .chain([&n.readout])
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return fail("noise_study probabilities must lie in [0, 1]".into());
        }
        Ok(())
    }
}

fn digits_len(p: Preset) -> usize {
    match p {
        Preset::FullQuantum | Preset::Hardware => 2,
        Preset::Latent | Preset::LatentConditioned => 10,
    }
}

/// Overlays `patch` onto `base`, recursing into objects.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Applies `a.b.c=value`. The value is read as JSON when it parses, and as a
/// bare string otherwise.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), CliError> {
    let Some((path, raw)) = spec.split_once('=') else {
        return Err(CliError::Config(format!(
            "override `{spec}` is not of the form path=value"
        )));
    };
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("override path `{path}` has an empty segment")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = doc;
    for key in keys {
        if !slot.is_object() {
            *slot = Value::Object(Default::default());
        }
        slot = slot
            .as_object_mut()
            .expect("object ensured above")
            .entry(key.to_string())
            .or_insert(Value::Null);
    }
    *slot = value;
    Ok(())
}

/// Resolves a config from an optional JSON document, an optional preset name
/// and overrides, then validates it.
pub fn resolve(document: Option<Value>, preset: Option<&str>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let preset_name = match (&document, preset) {
        (_, Some(p)) => p.to_string(),
        (Some(doc), None) => match doc.get("preset").and_then(Value::as_str) {
            Some(p) => p.to_string(),
            None => return Err(CliError::Config("config document has no `preset` field".into())),
        },
        (None, None) => return Err(CliError::Missing("no configuration: pass --config or --preset".into())),
    };
    let Some(p) = Preset::parse(&preset_name) else {
        let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        return Err(CliError::Config(format!(
            "unknown preset `{preset_name}` (expected one of {})",
            names.join(", ")
        )));
    };
    let mut doc = serde_json::to_value(RunConfig::preset(p)).expect("presets serialize");
    if let Some(d) = document {
        merge(&mut doc, d);
    }
    if preset.is_some() {
        doc["preset"] = Value::String(preset_name);
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}
