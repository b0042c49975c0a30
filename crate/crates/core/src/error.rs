use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no vote records")]
    NoRecords,

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("line {line}: vote must be 0, 1 or NA, got {value:?}")]
    InvalidVote { line: u64, value: String },

    #[error("line {line}: duplicate vote for unit {unit:?}, item {item:?}, period {period:?}")]
    DuplicateVote {
        line: u64,
        unit: String,
        item: String,
        period: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("undefined angle at the origin")]
    UndefinedAngle,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("overlapping anchors on period {0:?}")]
    OverlappingAnchors(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sampler failure: {0}")]
    Sampler(String),

    #[error("malformed draws directory {path}: {message}")]
    Draws { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by bad user input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NoRecords
                | Error::MalformedRow { .. }
                | Error::InvalidVote { .. }
                | Error::DuplicateVote { .. }
                | Error::Config(_)
                | Error::UndefinedAngle
                | Error::OverlappingAnchors(_)
                | Error::InvalidInput(_)
                | Error::Draws { .. }
        )
    }
}
