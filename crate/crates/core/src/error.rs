use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A weight fails `rho_j > 1`.
    #[error("weight sequence must satisfy rho_j > 1, got rho_{index} = {value}")]
    WeightNotDecaying { index: usize, value: f64 },

    /// A named hypothesis of a bound or construction does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("enumeration budget of {budget} nodes exceeded")]
    BudgetExceeded { budget: usize },

    #[error("point lies outside the cube [-1,1]^d (coordinate {index} = {value})")]
    OutsideCube { index: usize, value: f64 },

    #[error("cell is not contained in [-1,1]^d: {0}")]
    CellOutsideCube(String),

    #[error("class norm diverges: {0}")]
    Divergent(String),

    #[error("series tail bound {tail:e} exceeds tolerance {tolerance:e}")]
    TailTooLarge { tail: f64, tolerance: f64 },

    #[error("partition infeasible: {0}")]
    Infeasible(String),

    #[error("library document: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn hypothesis(msg: impl Into<String>) -> Self {
        Error::Hypothesis(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
