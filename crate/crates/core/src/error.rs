use thiserror::Error;

/// Errors raised by the relay network toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("zero vector: {0}")]
    ZeroVector(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("constraint `{constraint}` violated: {detail}")]
    Constraint { constraint: &'static str, detail: String },

    #[error("operation requires {expected}, config is {actual}")]
    WrongTopology {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("operation requires {expected} channel knowledge, config is {actual}")]
    WrongCsi {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn constraint(constraint: &'static str, detail: impl Into<String>) -> Self {
        Error::Constraint {
            constraint,
            detail: detail.into(),
        }
    }

    /// Short machine-greppable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Validation { .. } => "validation",
            Error::DimensionMismatch { .. } => "dimension",
            Error::ZeroVector(_) => "zero-vector",
            Error::Domain(_) => "domain",
            Error::Precondition(_) => "precondition",
            Error::NotHermitian(_) => "not-hermitian",
            Error::Constraint { .. } => "constraint",
            Error::WrongTopology { .. } => "topology",
            Error::WrongCsi { .. } => "csi",
            Error::Infeasible(_) => "infeasible",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
