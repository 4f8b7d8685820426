use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid model parameters (profile, sampling spec, pulse shape).
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Arguments outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative solver failed to meet its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Not enough data for a statistical estimate.
    #[error("insufficient data: {0}")]
    Diagnostic(String),
    #[error("internal error: {0}")]
    Internal(String),
}
