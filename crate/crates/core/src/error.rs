use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the region where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A parameter violates a family constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Non-finite value met during evaluation.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// An iterative scheme ran out of budget before reaching its tolerance.
    #[error("convergence error: {0}")]
    Convergence(String),
    /// A denominator or derivative dropped below its singularity threshold.
    #[error("singularity: {0}")]
    Singularity(String),
    /// Adaptive step size collapsed; carries the last accepted state.
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64, state: Vec<f64> },
    /// The separable reduction met a zero of the reduced variable.
    #[error("reduction singularity: {0}")]
    ReductionSingular(String),
    /// Least-squares fit could not be formed.
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures caused by bad input rather than numerics.
    pub fn is_invalid_input(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Domain(_))
    }
}
