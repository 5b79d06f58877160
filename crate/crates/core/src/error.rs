use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network model: {0}")]
    InvalidModel(String),

    #[error("invalid SINR target: {0}")]
    InvalidTarget(String),

    #[error("invalid power vector: {0}")]
    InvalidPower(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("receiver index {index} out of range for session {session} ({receivers} receivers)")]
    InvalidSelection {
        session: usize,
        index: usize,
        receivers: usize,
    },

    #[error("{count} embedded systems exceed the enumeration cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("matrix is not irreducible")]
    NotIrreducible,

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("iteration did not converge after {iterations} iterations and set primitivity is unknown (last beta {last_beta})")]
    PrimitivityUnknown {
        iterations: usize,
        last_beta: f64,
        trace: Vec<f64>,
    },

    #[error("operation requires {expected} sessions, model has {found}")]
    SessionCount { expected: usize, found: usize },

    #[error("invalid power constraint: {0}")]
    InvalidConstraint(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
