use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("normalisation diverges: alpha = {alpha} must exceed 1")]
    Divergence { alpha: f64 },

    #[error("series truncation failed: {max_terms} terms did not reach the tail bound")]
    TruncationFailure { max_terms: u64 },

    #[error("dataset is empty")]
    EmptyData,

    #[error("insufficient data: need at least {required} observations, got {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("pointwise log-likelihoods are not aligned: {a} vs {b} observations")]
    Alignment { a: usize, b: usize },

    #[error("cannot compare {a} with {b}: likelihoods live on different measures")]
    MixedMeasures { a: String, b: String },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: negative citation count {value}")]
    NegativeCount { line: u64, value: i64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
