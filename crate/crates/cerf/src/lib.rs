//! Computation-efficient random Fourier features (CERF).
//!
//! A teacher–learner framework: a high-precision random Fourier feature
//! embedding (teacher) supervises a cheap masked or blocked embedding
//! (learner). Training runs constrained variational EM with an ADMM M-step
//! under a spectral-norm relaxation of the orthogonality constraint, and the
//! evaluation pipelines compare embeddings at equal multiply-accumulate
//! budgets.

pub mod apps;
pub mod cvem;
pub mod error;
pub mod features;
pub mod numerics;

pub use error::{CerfError, Result};
