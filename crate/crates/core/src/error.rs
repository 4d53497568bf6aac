use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid roster: {0}")]
    Roster(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite sample in {0}")]
    NonFinite(&'static str),

    #[error("zero frequency at rank {0}; log-log fit undefined")]
    ZeroFrequency(f64),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
