//! Sample-quality metrics.
//!
//! Distances are computed on whatever feature vectors are passed in (raw
//! pixels or latents). No pretrained feature extractor is involved, so the
//! values are not comparable with Inception-based scores.

mod auc;
mod classifier;
mod gaussian;
mod gmm;
mod pca;
mod plot;
mod transport;

pub use auc::roc_auc;
pub use classifier::{accuracy, train_binary_classifier, BinaryClassifier, ClassifierConfig};
pub use gaussian::{fit_gaussian, frechet_distance, gaussian_w2, sqrt_psd, GaussianStats};
pub use gmm::{fit_gmm, fit_gmm_with, Gmm, GmmFit, GmmOptions};
pub use pca::{pca_fit, pca_project, PcaProjection};
pub use plot::{scatter_svg, write_scatter_svg, DIGIT_COLORS};
pub use transport::{transport, wam, TransportPlan};

/// Ridge added to every fitted covariance.
pub const COVARIANCE_RIDGE: f64 = 1e-6;
