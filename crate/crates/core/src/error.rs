use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LrinError {
    #[error("input is empty")]
    Empty,
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("target rank r = {r} is out of range 1..={q}")]
    RankOutOfRange { r: usize, q: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("SVD did not converge: {0}")]
    Svd(String),
    #[error("solver diverged: {0}")]
    Diverged(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LrinError {
    fn from(e: std::io::Error) -> Self {
        LrinError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LrinError>;
