use std::io;

use thiserror::Error;

/// Errors produced anywhere in the recovery pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("non-uniform timestamps at line {line}: step {found} differs from {expected}")]
    /// `line` is the file line for CSV input and the sample index otherwise.
    NonUniformTimestamps {
        line: u64,
        expected: f64,
        found: f64,
    },

    #[error("channel `{0}` has no observed samples")]
    AllMissingChannel(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("MAPE undefined: every truth value is zero")]
    MapeUndefined,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by invalid user-supplied parameters rather than data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
