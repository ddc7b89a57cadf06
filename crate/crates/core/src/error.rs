//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or a precondition violation (bad rates, too few
    /// rows, single-class batches, schema mismatches between fitted state and
    /// the data it is applied to).
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid data at rest: NaN/Inf entries, empty inputs, missing labels.
    #[error("data error: {0}")]
    Data(String),

    /// Shape mismatch between an operand and what the operation expects.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Malformed file content, located by row/column where possible.
    #[error("parse error at {path} (row {row}, column {col}): {message}")]
    Parse {
        path: String,
        row: usize,
        col: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
