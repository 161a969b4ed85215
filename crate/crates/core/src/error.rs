use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("symmetry generator incompatible with grid: {0}")]
    Symmetry(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("variant precondition failed: {0}")]
    Variant(String),
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("minimization failed: {0}")]
    Minimize(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
