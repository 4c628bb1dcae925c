use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrainingConfig;
use crate::ansatz::{build_circuit, param_count, CircuitSpec};
use crate::error::{bail, Result};
use crate::format::f64_17;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
const CHECKPOINT_KIND: &str = "qdm";

/// Trained denoiser parameters with the configuration that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub kind: String,
    pub config: TrainingConfig,
    /// One vector per step `t = 1..=T`, or a single shared vector.
    #[serde(serialize_with = "f64_17::nested")]
    pub parameters: Vec<Vec<f64>>,
    /// Mean infidelity of each completed epoch.
    #[serde(serialize_with = "f64_17::vec")]
    pub loss_history: Vec<f64>,
}

impl Checkpoint {
    pub fn new(config: TrainingConfig, parameters: Vec<Vec<f64>>, loss_history: Vec<f64>) -> Result<Self> {
        let ck = Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            kind: CHECKPOINT_KIND.to_string(),
            config,
            parameters,
            loss_history,
        };
        ck.validate()?;
        Ok(ck)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            bail!(Format, "unsupported checkpoint version {}", self.format_version);
        }
        if self.kind != CHECKPOINT_KIND {
            bail!(Format, "expected a {CHECKPOINT_KIND} checkpoint, found {:?}", self.kind);
        }
        let steps = self.config.schedule.steps();
        let expected_sets = if self.config.share_params_across_t {
            steps.min(1)
        } else {
            steps
        };
        if self.parameters.len() != expected_sets {
            bail!(
                Format,
                "{} parameter sets for {expected_sets} circuits",
                self.parameters.len()
            );
        }
        let count = param_count(&self.config.ansatz)?;
        if let Some(bad) = self.parameters.iter().find(|p| p.len() != count) {
            bail!(
                Format,
                "parameter vector of length {} where {count} expected",
                bad.len()
            );
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.config.schedule.steps()
    }

    pub fn circuit(&self) -> Result<CircuitSpec> {
        build_circuit(&self.config.ansatz)
    }

    /// Parameters of the circuit applied at step `t`.
    pub fn params_for(&self, t: usize) -> &[f64] {
        if self.config.share_params_across_t {
            &self.parameters[0]
        } else {
            &self.parameters[t - 1]
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        ck.validate()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
