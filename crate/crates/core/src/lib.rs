//! Quantum denoising diffusion models on a state-vector simulator.
//!
//! Layers, bottom up:
//!
//! * [`statevec`]: pure-state simulation, measurement channels, fidelity.
//! * [`ansatz`]: strongly entangling circuit architectures, execution and
//!   OpenQASM export.
//! * [`diffusion`]: forward noising, infidelity training with
//!   parameter-shift gradients, generative sampling.
//! * [`latent`]: dense autoencoder providing amplitude-encodable latents.
//! * [`data`]: MNIST IDX ingestion, resampling and image/CSV output.
//! * [`metrics`]: Fréchet and Gaussian-mixture Wasserstein distances, ROC-AUC,
//!   digit classifiers and PCA.

pub mod ansatz;
pub mod data;
pub mod diffusion;
mod error;
pub mod format;
pub mod latent;
pub mod metrics;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod statevec;

pub use error::{Error, Result};

pub use ansatz::{AnsatzConfig, CircuitSpec, CnotSchedule, Connectivity, GateOp, Variant};
pub use diffusion::{Checkpoint, NoiseSchedule, TrainingConfig};
pub use metrics::{GaussianStats, Gmm};
pub use num_complex::Complex64;
pub use statevec::{Axis, BranchEnsemble, QuantumState};
