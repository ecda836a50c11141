use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A named parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver failed: {0}")]
    Numeric(String),

    /// A closed-form visibility was requested away from the settings it is valid for.
    #[error("settings error: {0}")]
    Settings(String),

    #[error("invalid scan: {0}")]
    InvalidScan(String),

    #[error("fringe fit is underdetermined: {distinct} distinct phases (need at least 3)")]
    UnderdeterminedFit { distinct: usize },

    #[error("division by a vanishing quantity: {0}")]
    Degenerate(String),

    /// A state parameter cannot be recovered from the data (e.g. I_H at eta = 0).
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("transmissions are not identifiable: {0}")]
    Unidentifiable(String),

    #[error("inconsistent data: {0}")]
    InconsistentData(String),

    #[error("ambiguous transmission solution: {0}")]
    Ambiguous(String),

    #[error("incomplete scan plan, missing: {}", .0.join(", "))]
    IncompletePlan(Vec<String>),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
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
        Error::Csv(e.to_string())
    }
}
