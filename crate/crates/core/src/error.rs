use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TgdError {
    #[error("invalid parameters: {0}")]
    Domain(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("no data rows")]
    EmptyData,

    #[error("negative value on line {line}")]
    NegativeValue { line: u64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown dataset `{0}` (expected `ntg` or `doctor_visit`)")]
    UnknownDataset(String),

    #[error("observed proportions require both 0 and 1 in the sample")]
    MissingCells,

    #[error("quantile points give identical empirical CDF values")]
    DegenerateQuantiles,

    #[error("no interior solution: {0}")]
    NoSolution(String),

    #[error("optimizer did not converge after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("M-step score has no sign change on the search bracket")]
    MStepBracketFailure,

    #[error("information matrix is singular or not positive definite")]
    SingularInformation,

    #[error("unsupported degrees of freedom: {0}")]
    UnsupportedDf(u32),

    #[error("i/o error: {0}")]
    Io(String),
}

impl TgdError {
    /// True for errors that come from numerical fitting rather than input data.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            TgdError::ConvergenceFailure { .. }
                | TgdError::MStepBracketFailure
                | TgdError::SingularInformation
                | TgdError::NoSolution(_)
        )
    }
}

impl From<std::io::Error> for TgdError {
    fn from(e: std::io::Error) -> Self {
        TgdError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, TgdError>;
