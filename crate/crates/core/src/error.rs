use std::io;

use thiserror::Error;

/// Errors produced across the segmentation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: invalid UTF-8")]
    Decode { line: usize },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    Shape {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("non-finite gradient for parameter `{name}`")]
    NonFiniteGradient { name: String },

    #[error("non-finite loss at batch {batch}")]
    NonFiniteLoss { batch: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("sentence {sentence}: character sequences of gold and prediction differ")]
    Alignment { sentence: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
