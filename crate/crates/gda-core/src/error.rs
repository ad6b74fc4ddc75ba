use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes of the public
/// operations: contract violations on inputs, guard rails on problem sizes,
/// and the external-solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no verified equilibrium found: {0}")]
    EquilibriumNotFound(String),

    #[error("inputs are not one step of the alternating update: {0}")]
    NotAnAlternatingStep(String),

    #[error("rejection sampling failed: {0}")]
    Sampling(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("certificate rejected: {0}")]
    Certificate(String),

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
