use thiserror::Error;

/// Errors produced by the numerical routines, samplers, and pipelines.
#[derive(Debug, Error)]
pub enum CerfError {
    #[error("length {0} is not a power of two")]
    NonPowerOfTwoLength(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is rank deficient (singular value {0:.3e} below threshold)")]
    RankDeficient(f64),

    #[error("linear system is singular or not positive definite")]
    SingularSystem,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel has no closed form: {0}")]
    NoClosedForm(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, CerfError>;
