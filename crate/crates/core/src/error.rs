use thiserror::Error;

/// Errors produced by the shaping library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("word has weight {found}, expected {expected}")]
    Weight { expected: usize, found: usize },

    #[error("index is out of range for C({n}, {w})")]
    IndexOutOfRange { n: usize, w: usize },

    #[error("word rank is not below 2^{k}, so it was not produced by this encoder")]
    OutOfCodebook { k: usize },

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        Error::Integrity(msg.into())
    }

    /// True for errors that indicate corrupted or inconsistent data rather
    /// than bad arguments.
    pub fn is_integrity(&self) -> bool {
        matches!(
            self,
            Error::Integrity(_) | Error::Weight { .. } | Error::OutOfCodebook { .. } | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
