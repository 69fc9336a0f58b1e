use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank index {index} outside 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("cutoff k={k} is invalid for a list of length {len}")]
    CutoffOutOfRange { k: usize, len: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid relevance indicator {value} at position {position} (expected 0 or 1)")]
    InvalidIndicator { position: usize, value: u8 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("k={k} exceeds the enumeration bound of {max}")]
    Capacity { k: usize, max: usize },

    #[error("{model} baseline has no closed form under {norm} normalization")]
    NormalizationMismatch { model: &'static str, norm: &'static str },

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
