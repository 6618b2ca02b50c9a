use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the library. Mathematical validation problems and
/// numerical failures are kept apart so callers can tell bad input from a
/// solver that did not converge.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid root system: {0}")]
    RootSystem(String),

    #[error("not a root of the root system: {0}")]
    NotARoot(String),

    #[error("invalid polytope: {0}")]
    Polytope(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A mathematical precondition on the input data does not hold.
    #[error("{condition}: {detail}")]
    Validation { condition: String, detail: String },

    #[error("quadrature did not reach tolerance (estimated relative error {estimate:e})")]
    Quadrature { estimate: f64 },

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("cannot parse rational {0:?}")]
    ParseRational(String),
}

impl Error {
    pub(crate) fn validation(condition: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Validation {
            condition: condition.into(),
            detail: detail.into(),
        }
    }
}
