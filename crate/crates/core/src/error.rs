//! Error type for all fallible operations.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DaeError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("rank drop at level {level}, t = {t:e}: found rank {found}, expected {expected}")]
    RankDrop {
        level: usize,
        t: f64,
        found: usize,
        expected: usize,
    },
    #[error("pair is not regular: {0}")]
    NonRegular(String),
    #[error("underdetermined window: {rows} rows for {cols} unknowns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("singular window {window}: smallest pivot {sigma_min:e}")]
    SingularWindow { window: usize, sigma_min: f64 },
    #[error("t = {t} outside [{a}, {b}]")]
    Domain { t: f64, a: f64, b: f64 },
    #[error("inconsistent structure at boundary {boundary}: {detail}")]
    Inconsistent { boundary: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, DaeError>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(DaeError::Config(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(DaeError::Contract(msg.into()))
}
