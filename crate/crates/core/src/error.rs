//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violated an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Tensor or map shapes are inconsistent with the configured layer.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A file could not be parsed; carries positional context where known.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    /// A record failed schema validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// Scene synthesis could not satisfy a placement constraint.
    #[error("placement failed: {0}")]
    Placement(String),

    /// Checkpoint/config incompatibility.
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),

    /// Training diverged; names the offending loss term and step.
    #[error("non-finite loss: term `{term}` at step {step}")]
    NonFiniteLoss { term: String, step: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<image::ImageError> for Error {
    fn from(e: image::ImageError) -> Self {
        Error::Image(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand used by constructors that validate arguments.
pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
