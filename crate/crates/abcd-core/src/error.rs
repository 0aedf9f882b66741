use thiserror::Error;

/// Errors produced by the abcd-core library.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible tensor/box/vector shapes (channel mismatch, bad lengths,
    /// non-broadcastable operands).
    #[error("shape error: {0}")]
    Shape(String),

    /// Invalid configuration values (even kernel size, thresholds outside
    /// their range, bad augmentation parameters, too few repetitions).
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside the mathematical domain of an operation, e.g. a box
    /// with non-positive width or height fed to the aspect-ratio term.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input values (non-finite numbers, empty score vectors).
    #[error("input error: {0}")]
    Input(String),

    /// A text format failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Unsupported or corrupt binary image data.
    #[error("format error: {0}")]
    Format(String),

    /// Metric evaluation could not produce a defined result.
    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
