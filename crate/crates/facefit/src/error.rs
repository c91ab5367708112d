//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent (CLI exit 2).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Input data violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A metric is undefined for the given data (single view, short track).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Quaternion moving average collapsed (antipodal cancellation).
    #[error("degenerate smoothing window: mean norm {norm} below 1e-6")]
    DegenerateWindow { norm: f64 },

    /// The optimization objective became non-finite.
    #[error("optimization diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    /// Filesystem failure (CLI exit 3).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON in an input file.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
