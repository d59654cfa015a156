use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("closed form is only available for even sphere dimension, got d = {0}")]
    OddDimension(usize),

    #[error("quadrature did not converge: node doubling changed the result by {delta:e} at {nodes} nodes")]
    NonConvergence { nodes: usize, delta: f64 },

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {0:e}")]
    Asymmetric(f64),

    #[error("step size too large: eta * lambda_max = {0} >= 1")]
    StepTooLarge(f64),

    #[error("not enough points for a power-law fit: need {needed}, have {have}")]
    InsufficientPoints { needed: usize, have: usize },

    #[error("empty result: {0}")]
    Empty(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of the numerics themselves, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::Asymmetric(_) | Error::StepTooLarge(_)
        )
    }
}
