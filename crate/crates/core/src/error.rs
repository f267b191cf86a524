use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid problem: {0}")]
    Input(String),
    #[error("structure rejected: {0}")]
    Structure(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("solve failed: {0}")]
    Solve(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
