//! Denoising diffusion over amplitude-encoded states.
//!
//! Circuit `t` maps `|x_t⟩` to `|x_{t-1}⟩` for `t ∈ 1..=T`; sampling applies
//! circuits `T` down to `1` to an encoded prior draw.

mod checkpoint;
mod forward;
mod loss;
mod probe;
mod sample;
mod schedule;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use forward::{draw_pair, forward_noise, PairSampling, TrainingPair};
pub use loss::{
    finite_difference_grad, gradient, infidelity_loss, pair_fidelity, pair_loss, parameter_shift_grad, GradientMethod,
    FD_STEP,
};
pub use probe::{mean_pairwise_distance, variability_probe, ProbeRow};
pub use sample::{
    decode_data, denoise_chain, measured_qubits, prior_state, sample, LabelHandling, SampleMeasurement, SampleOptions,
    SampleOutput, SampleStats,
};
pub use schedule::{default_schedule, make_linear_schedule, NoiseSchedule, DEFAULT_BETA_END, DEFAULT_BETA_START};
pub use train::{init_params, train, train_with, TrainingConfig, TrainingItem};
