use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("simulation infeasible: {0}")]
    SimulationInfeasible(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("numerical accuracy not reached: {0}")]
    Accuracy(String),

    #[error("degenerate transformation: no Hermite coefficient of order >= 1 exceeds the tolerance")]
    Degenerate,

    #[error("block length {ell} is not in 1..={n}")]
    BlockLength { ell: usize, n: usize },

    #[error("at least 2 blocks are required, got {0}")]
    InsufficientBlocks(usize),

    #[error("outside the domain: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("root finding failed: {0}")]
    Solver(String),

    #[error("mean score derivative is numerically zero")]
    SingularDerivative,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("functional evaluation failed with block {block} deleted: {source}")]
    DeletedBlock {
        block: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
