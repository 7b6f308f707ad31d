use thiserror::Error;

/// Errors raised by samplers, solvers and problem constructors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("density is not normalizable: {0}")]
    NonNormalizable(String),

    #[error("interval [{lo}, {hi}] has probability mass {mass:e}, below the sampling tolerance")]
    NegligibleMass { lo: f64, hi: f64, mass: f64 },

    #[error("rejection budget of {budget} trials exhausted ({accepted} accepted)")]
    RejectionBudget { budget: u64, accepted: u64 },

    #[error("empty conditional interval for coordinate {coord}: violating rows {rows:?}")]
    EmptyInterval { coord: usize, rows: Vec<usize> },

    #[error("rates {0} and {1} are too close for the partial-fraction route; use the equal-rate sampler")]
    CoalescingRates(f64, f64),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unbounded: {0}")]
    Unbounded(String),

    #[error("failed to converge: {0}")]
    Convergence(String),

    #[error("payoff {value} is not positive at the current state; increase the payoff shift")]
    NonPositivePayoff { value: f64 },

    #[error("{0} is not implemented")]
    NotImplemented(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that describe an infeasible or unbounded problem rather than a sampler fault.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_) | Error::Unbounded(_) | Error::NonNormalizable(_)
        )
    }
}
