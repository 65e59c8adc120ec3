use std::io;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The variants map onto the process exit codes used by the command-line
/// front end: configuration problems are validation failures (exit 2),
/// everything that goes wrong while computing is a numerical failure (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical instability at step {step}: {detail}")]
    Unstable { step: u64, detail: String },

    #[error("analysis quality: {0}")]
    Analysis(String),

    #[error("multi-mode contamination: fit residual {residual:.3} exceeds {limit:.3}; extend the ring-down")]
    MultiMode { residual: f64, limit: f64 },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid cascade rates: {0}")]
    InvalidRates(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("normalization inconsistency: {0}")]
    Normalization(String),

    #[error("undefined overlap: {0}")]
    UndefinedOverlap(String),

    #[error("malformed file {path}: {detail}")]
    Format { path: String, detail: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Whether this error stems from invalid user input rather than from a
    /// computation going wrong.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config(_) | Error::OutOfRange(_))
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            2
        } else {
            3
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
