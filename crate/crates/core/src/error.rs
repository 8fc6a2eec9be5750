//! Error type shared by all toolkit modules.

use thiserror::Error;

/// Toolkit-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the toolkit's library modules.
///
/// The variants map onto the distinct failure classes the command-line
/// front end reports with separate exit codes: I/O, schema (malformed
/// inputs), invalid arguments, and numeric degeneracy.
#[derive(Debug, Error)]
pub enum Error {
    /// Underlying read/write failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Input file does not match the documented schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// Arguments violate an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The computation is mathematically undefined on this input.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A stationary distribution is not unique for this matrix.
    #[error("stationary distribution is not unique: matrix is {structure}")]
    NonUniqueStationary {
        /// Detected structural cause, `"reducible"` or `"periodic"`.
        structure: &'static str,
    },

    /// Too few data points for the requested diagnostic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A contingency-table cell is zero, so the log odds ratio is undefined.
    #[error("zero cell {cell} in contingency table; rerun with the +0.5 correction enabled to proceed")]
    ZeroCell {
        /// Which cell was zero: one of `n11`, `n12`, `n21`, `n22`.
        cell: &'static str,
    },

    /// CSV-level parse failure (structural, not per-row content).
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// JSON (de)serialization failure for structured documents.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable code for the error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Schema(_) | Error::Csv(_) | Error::Json(_) => "schema",
            Error::InvalidInput(_) => "invalid-input",
            Error::Degenerate(_)
            | Error::NonUniqueStationary { .. }
            | Error::InsufficientData(_)
            | Error::ZeroCell { .. } => "degenerate",
        }
    }
}
