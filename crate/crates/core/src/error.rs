use thiserror::Error;

/// Failures raised anywhere in the exact or numerical pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("classification error: {0}")]
    Classification(String),
    #[error("size error: {0}")]
    Size(String),
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
