//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,

    #[error("system is not square ({m} polynomials in {n} variables)")]
    NotSquare { m: usize, n: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical rank is ambiguous at degree {degree}: gap {gap:.3e} below threshold")]
    RankIndeterminate { degree: usize, gap: f64 },

    #[error("the zero is not regular of breadth {kappa} and order {d}: {reason}")]
    NotRegular { kappa: usize, d: u32, reason: String },

    #[error("certification window is empty (eps_minus {eps_minus:.6} >= eps_plus {eps_plus:.6})")]
    EmptyWindow { eps_minus: f64, eps_plus: f64 },

    #[error("bound computation failed: {0}")]
    BoundFailure(String),

    #[error("variable substitution touches a forbidden variable (index {index})")]
    BadSubstitution { index: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("verification failed: {0}")]
    Verify(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
