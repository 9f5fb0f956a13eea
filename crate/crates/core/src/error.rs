use thiserror::Error;

/// Failures raised by the spectral toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violates a structural invariant (ordering, ranges, schema).
    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: String, reason: String },

    /// An iterative solver stopped before reaching its tolerance.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    /// A value is singular at the requested point (pole, band edge, ...).
    #[error("singular point: {0}")]
    Singular(String),

    /// A numerical invariant was violated beyond tolerance.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Working precision was exhausted.
    #[error("precision exhausted at {bits} bits: {reason}")]
    Precision { bits: usize, reason: String },
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn no_convergence(what: impl Into<String>, iterations: usize, residual: f64) -> Self {
        Error::NoConvergence {
            what: what.into(),
            iterations,
            residual,
        }
    }

    /// True for malformed input, as opposed to numeric failure.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidInput { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
