use thiserror::Error;

/// Errors reported by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid rate {0}: rates must be finite and non-negative")]
    InvalidRate(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("load list is empty")]
    EmptyLoads,
    #[error("machine index {index} out of range for {machines} machines")]
    MachineOutOfRange { index: usize, machines: usize },
    #[error("more big jobs than machines: {0}")]
    MachinesExhausted(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("hypotheses violated: {0}")]
    HypothesesViolated(String),
    #[error("configuration set exceeds limit of {limit} configurations")]
    ConfigExplosion { limit: usize },
    #[error("dynamic program exceeds state budget of {limit} states")]
    StateBudget { limit: usize },
    #[error("size guard: {0}")]
    SizeGuard(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by malformed input rather than by the solver.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidRate(_) | Error::InvalidArgument(_) | Error::Parse(_) | Error::EmptyLoads
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
