use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A probability vector is not in the open simplex.
    #[error("point is not in the open simplex: {0}")]
    NonInterior(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// An argument is outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method exhausted its iteration budget.
    #[error("{method} did not converge after {iterations} iterations")]
    Convergence { method: &'static str, iterations: usize },

    /// Enumerating the lattice support would exceed the configured cap.
    #[error("support of size {size} exceeds enumeration cap {cap}")]
    CapExceeded { size: u128, cap: u128 },

    #[error("count vector is outside the bulk of the distribution")]
    OutOfBulk,

    #[error("probability vector has a weight below 1/tau = {}", 1.0 / .tau)]
    OutOfPTau { tau: f64 },

    /// The bounds only hold for `tau >= d + 1` and `n >= tau^4`.
    #[error("regime violation: {0}")]
    RegimeViolation(String),

    /// An observed category has zero count.
    #[error("category {category} has a zero count")]
    ZeroCount { category: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
