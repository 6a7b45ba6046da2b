//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("eigensolver failed to converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("eigenbasis is defective at working tolerance (condition number {cond:.3e})")]
    EpProximity { cond: f64 },

    #[error("matrix exponential overflow: {0}")]
    Overflow(String),

    #[error("invalid system specification: {0}")]
    InvalidSpec(String),

    #[error("unknown preset: {0}")]
    UnknownPreset(String),

    #[error("parameter {value} is not a small rational; pre-rationalize or use the numeric path")]
    IrrationalParameter { value: f64 },

    #[error("branch tracking ambiguous: {0}")]
    TrackingAmbiguity(String),

    #[error("jordan chain data inconsistent: {0}")]
    InvalidChains(String),

    #[error("chain ensemble does not span the space: have {have} vectors, need {need}")]
    IncompleteBasis { have: usize, need: usize },

    #[error("initial density matrix is not Hermitian (deviation {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("fit window contaminated by subdominant exponentials (residual floor {floor:.3e}); widen the window or extend the time grid")]
    WindowContaminated { floor: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
