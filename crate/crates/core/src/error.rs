use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not a square integer matrix: {0}")]
    NotSquare(String),

    #[error("not expanding: {0}")]
    NotExpanding(String),

    #[error("indeterminate expansion: eigenvalue modulus {modulus} is within 1e-10 of 1")]
    IndeterminateExpansion { modulus: f64 },

    #[error("invalid stencil rule: {0}")]
    InvalidRule(String),

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("selector error: {0}")]
    Selector(String),

    #[error("direction set does not span the lattice: {0}")]
    NonSpanning(String),

    #[error("no difference scheme of order {order}: reproduction degree is {degree}")]
    NoDifferenceScheme { order: usize, degree: i64 },

    #[error("difference decomposition failed: {0}")]
    Decomposition(String),

    #[error("enumeration budget exceeded at depth {depth}; feasible depth is {feasible}")]
    Budget { depth: usize, feasible: usize },

    #[error("memory budget exceeded at level {level}; feasible level count is {feasible}")]
    MemoryBudget { level: usize, feasible: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown name {0:?}")]
    UnknownName(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
