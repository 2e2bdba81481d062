use thiserror::Error;

/// Errors raised by the library. Each variant maps to one CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad partitions, probabilities, lengths, stopping times.
    #[error("validation error: {0}")]
    Validation(String),

    /// Input is well formed but outside the hypotheses of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested computation exceeds a configured size limit.
    #[error("resource limit: {0}")]
    Resource(String),

    /// An iterative routine failed to converge.
    #[error("numerical error: {message} (last bracket [{lo:e}, {hi:e}])")]
    Numerical { message: String, lo: f64, hi: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Domain(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
            Error::Resource(_) => 2,
            Error::Numerical { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
