use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CqError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error at level {level}: argument {value}")]
    Domain { level: usize, value: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("representation mismatch: {0}")]
    RepMismatch(String),
    #[error("point outside chart domain")]
    OutsideDomain,
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("missing derivative data for {0}")]
    MissingDerivative(String),
    #[error("non-unitary transport: norm drift {0:.3e}")]
    NonUnitary(f64),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, CqError>;
