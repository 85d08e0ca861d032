use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed manifest: {0}")]
    Manifest(String),

    #[error("feature blob is {actual} bytes, manifest implies {expected}")]
    BlobLength { expected: usize, actual: usize },

    #[error("duplicate item id {0:?}")]
    DuplicateId(String),

    #[error("unknown split tag {0:?}")]
    UnknownSplit(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("row {0} has zero norm and cannot be normalized")]
    ZeroNorm(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("unknown item {0:?}")]
    UnknownItem(String),

    #[error("unknown session {0:?}")]
    UnknownSession(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
