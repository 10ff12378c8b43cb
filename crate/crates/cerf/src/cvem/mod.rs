//! Constrained variational EM for learning computation-efficient random
//! Fourier features from a high-precision teacher embedding.
//!
//! The generative model ties teacher features Φ to learner features Ψ through
//! an orthogonally constrained map W, a shared Beta-Bernoulli selector Z, and
//! a fixed scale c. Inference alternates mean-field coordinate sweeps over the
//! selector posterior with an ADMM M-step that trades the hard orthogonality
//! constraint for a spectral-norm penalty, and finishes with a Procrustes
//! projection onto the orthogonal group.

mod config;
mod estep;
mod mstep;
mod state;
mod train;

pub use config::{AdmmConfig, TrainConfig};
pub use estep::{elbo, estep_sweep};
pub use mstep::{mstep_admm, AdmmState};
pub use state::{expected_log_pi, extract_selector, VariationalState};
pub use train::{train, train_embedding, StageDiag, TrainOutput, TrainedCerf};
