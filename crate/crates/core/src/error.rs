use thiserror::Error;

/// Errors produced by the structural computations in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A dimension parameter is zero where a positive count is required.
    #[error("degenerate dimension: {0}")]
    DegenerateDimension(String),

    /// Input does not have the required shape or structure (odd sizes, non-skew input, ...).
    #[error("structure error: {0}")]
    Structure(String),

    /// A model invariant is violated; carries the name of the invariant and the residual found.
    #[error("validation failed: {invariant} (residual {residual:.3e})")]
    Validation { invariant: String, residual: f64 },

    /// Two rank decisions disagree or a rank lands on the wrong parity.
    ///
    /// The spectra are attached so the caller can pick a better tolerance.
    #[error("rank ambiguity: {reason}")]
    RankAmbiguity {
        reason: String,
        singular_values: Vec<f64>,
        skew_values: Vec<f64>,
    },

    /// No ω-partner above tolerance exists for the vector at `index`.
    #[error("degenerate symplectic pairing at vector {index} (|ω| = {pairing:.3e})")]
    DegeneratePairing { index: usize, pairing: f64 },

    /// A computed decomposition failed its own verification.
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    /// A JSON document is malformed; names the offending field.
    #[error("invalid document: field `{field}`: {reason}")]
    Document { field: String, reason: String },

    /// A supplied refinement pair does not produce the required pattern.
    #[error("refinement rejected: {reason} at block ({row}, {col})")]
    RefinementRejected {
        reason: String,
        row: usize,
        col: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
