use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the CLI exit codes: configuration and validation
/// problems are usage errors (2), missing or malformed files are data
/// errors (3), and NaN/Inf blow-ups are numerical failures (4).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (grid mismatch, non-positive constants, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// Invalid runtime input (negative electrons, shape mismatch, ...).
    #[error("validation error: {0}")]
    Validation(String),
    /// Missing or inconsistent on-disk data.
    #[error("data error: {0}")]
    Data(String),
    /// Non-finite values where finite ones are required.
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation(_) => 2,
            Error::Data(_) | Error::Io(_) | Error::Json(_) => 3,
            Error::Numerical(_) => 4,
        }
    }
}
