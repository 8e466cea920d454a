use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Array shapes do not line up (e.g. coefficient length vs. mediator count).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Data fails validation (non-finite values, too few rows, bad header, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A column has zero sample variance and cannot be standardized.
    #[error("constant column: {0} has zero variance")]
    ConstantColumn(String),

    /// A tuning parameter or option is out of its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numeric routine failed (singular system, non-finite intermediate, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Too many bootstrap resamples were degenerate to trust the intervals.
    #[error("degenerate bootstrap: {redrawn} of {resamples} resamples required redraws (limit 20%)")]
    DegenerateBootstrap { redrawn: usize, resamples: usize },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
