//! Library-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A cell failed to parse as a finite number, or a row had the wrong
    /// number of columns. `line` is 1-based and counts the header if present.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Structurally invalid input: empty file, bad label column, labels
    /// that do not form a two-class problem.
    #[error("schema: {0}")]
    Schema(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain: {0}")]
    Domain(String),

    /// Numerical failure in a linear solve or factorization.
    #[error("solver: {0}")]
    Solver(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
