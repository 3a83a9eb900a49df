use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("map is not trace preserving (residual {residual:e})")]
    NotCptp { residual: f64 },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("error-correction condition violated (max residual {residual:e})")]
    Condition {
        residual: f64,
        residuals: Vec<Vec<f64>>,
    },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("no address {0} in memory")]
    NotFound(u64),
    #[error("slot {0} has no copies left")]
    OutOfCopies(u64),
    #[error("slot {0} carries no description and cannot be restored")]
    NotRestorable(u64),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("instruction {index}: {source}")]
    Instruction {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Short machine-readable code used by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Argument(_) => "E_ARGUMENT",
            Error::Dimension(_) => "E_DIMENSION",
            Error::Validation(_) => "E_VALIDATION",
            Error::Numerical(_) => "E_NUMERICAL",
            Error::NotCptp { .. } => "E_NOT_CPTP",
            Error::Configuration(_) => "E_CONFIG",
            Error::Condition { .. } => "E_CONDITION",
            Error::Precondition(_) => "E_PRECONDITION",
            Error::Estimation(_) => "E_ESTIMATION",
            Error::NotFound(_) => "E_NOT_FOUND",
            Error::OutOfCopies(_) => "E_OUT_OF_COPIES",
            Error::NotRestorable(_) => "E_NOT_RESTORABLE",
            Error::Parse { .. } => "E_PARSE",
            Error::Instruction { source, .. } => source.code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
