use std::fmt;

/// CLI failure classes, mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config keys, contradictory options → exit 1.
    Usage(String),
    /// Unreadable or malformed input data → exit 2.
    Data(String),
    /// Numerical failure inside the library → exit 3.
    Numeric(cerf::CerfError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cerf::CerfError> for CliError {
    fn from(e: cerf::CerfError) -> Self {
        match e {
            cerf::CerfError::InvalidParameter(m) => CliError::Usage(m),
            other => CliError::Numeric(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
