use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The matrix has an eigenvalue whose real part `min_re` is not safely positive.
    #[error("matrix is not stable: an eigenvalue has real part {min_re:.3e} <= 1e-12")]
    NotStable { min_re: f64 },

    #[error("degenerate structure: {0}")]
    Degenerate(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("friction too low: gamma = {gamma} < required gamma0 = {required}")]
    FrictionTooLow { gamma: f64, required: f64 },

    #[error("no certificate exists: {0}")]
    Infeasible(String),

    #[error("fluctuation-dissipation violated: B + B^T has eigenvalue {min_eig:.3e}")]
    FdViolation { min_eig: f64 },

    #[error("trajectory diverged at step {step}")]
    Diverged { step: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
