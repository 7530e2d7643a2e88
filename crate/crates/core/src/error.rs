use thiserror::Error;

/// Errors raised by the matrix, butterfly, elimination and Hadamard routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// Pivot magnitude fell below the singularity threshold at 1-based step `step`.
    #[error("singular pivot at elimination step {step} (|pivot| = {magnitude:e})")]
    Singular { step: usize, magnitude: f64 },

    /// An angle sits on (or within rounding of) a multiple of pi/2.
    #[error("degenerate angle {angle} at index {index}: multiple of pi/2")]
    DegenerateAngle { index: usize, angle: f64 },

    #[error("enumeration infeasible: {inputs} inputs exceeds the limit of {limit}")]
    Infeasible { inputs: u128, limit: u128 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
