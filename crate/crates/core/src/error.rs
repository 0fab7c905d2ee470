use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("invalid register index {index} for a layout with {len} registers")]
    BadRegister { index: usize, len: usize },

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("operator is not a valid density operator: {0}")]
    InvalidDensity(String),

    #[error("projectors do not sum to the identity (deviation {0:e})")]
    IncompleteMeasurement(f64),

    #[error("dimension {dim} exceeds the dense limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("oracle kind mismatch: expected {expected}, got {got}")]
    WrongOracle { expected: String, got: String },

    #[error("query budget exceeded on oracle {oracle}: budget {budget}")]
    BudgetExceeded { oracle: usize, budget: usize },

    #[error("simulator query index {index} out of range (budget {budget})")]
    QueryIndex { index: usize, budget: usize },

    #[error("copy pool exhausted: needed {needed}, {left} left")]
    PoolExhausted { needed: usize, left: usize },

    #[error("quantum register cannot cross parties")]
    QuantumMessage,

    #[error("no candidate passed the threshold")]
    NotFound,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
