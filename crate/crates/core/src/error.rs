use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    Validation(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain mismatch: expected {expected}, got {got}")]
    DomainMismatch { expected: &'static str, got: &'static str },

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("training diverged at batch {batch}: non-finite parameter")]
    NonFinite { batch: usize },

    #[error("aligned sampling produced no aligned instance after {draws} draws")]
    AlignmentExhausted { draws: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
