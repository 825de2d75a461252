use std::io;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum QcorrError {
    /// An input was outside the domain of the operation (non-finite angle,
    /// out-of-range correlation, unnormalized state, empty sample, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Event streams violated a structural rule, e.g. a duplicated pair tag.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Configuration failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical procedure ran but could not produce a result.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, QcorrError>;

pub(crate) fn domain(msg: impl Into<String>) -> QcorrError {
    QcorrError::Domain(msg.into())
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(domain(format!("{name} must be finite, got {value}")))
    }
}
