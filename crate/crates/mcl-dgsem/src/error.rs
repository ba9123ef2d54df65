use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("inadmissible state at element {elem}, node {node}: {what}")]
    Inadmissible {
        elem: usize,
        node: usize,
        what: String,
    },

    #[error("non-finite value at element {elem}, node {node}: {what}")]
    NonFinite {
        elem: usize,
        node: usize,
        what: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SolverError>;
