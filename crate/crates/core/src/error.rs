use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{function}: argument {arg} outside the domain")]
    Domain { function: &'static str, arg: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid prior generator: {0}")]
    InvalidPrior(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("invalid occurrence vector: {0}")]
    InvalidOccurrence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid rational literal {0:?}")]
    InvalidRational(String),

    #[error("empty working set: {0}")]
    EmptyWorkingSet(String),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("every feasible vector has zero probability under the prior")]
    AllZeroProbability,

    #[error("moment target {target} outside attainable interval [{min}, {max}] for constraint {index}")]
    InfeasibleMoment {
        index: usize,
        target: String,
        min: String,
        max: String,
    },

    #[error("no convergence after {iterations} iterations (best residual {residual:e}): {reason}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("integer overflow while {0}")]
    Overflow(String),

    #[error("empty input to {0}")]
    EmptyInput(&'static str),

    #[error("unsupported report format {0:?}")]
    UnsupportedFormat(String),
}

impl Error {
    /// True for outcomes that describe an infeasible problem rather than a
    /// numeric or usage failure.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::EmptyWorkingSet(_) | Error::InfeasibleMoment { .. } | Error::AllZeroProbability
        )
    }
}
