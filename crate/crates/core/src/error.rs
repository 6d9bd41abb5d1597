use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("unsupported curve: {0}")]
    UnsupportedCurve(String),
    #[error("change of chart required: {0}")]
    ChangeChart(String),
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
