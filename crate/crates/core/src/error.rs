use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("observation has zero probability under the current belief and action")]
    ZeroProbabilityObservation,

    /// An enumeration or search would exceed its configured cap. `required` is
    /// a decimal rendering because measured sizes routinely overflow `u64`.
    #[error("capacity exceeded: {what} requires {required}, cap is {cap}")]
    CapacityExceeded {
        what: String,
        required: String,
        cap: u64,
    },

    #[error("range mismatch: {0}")]
    RangeMismatch(String),

    #[error("model is not liftable: {reason}")]
    NotLiftable {
        reason: String,
        /// Agent pair whose exchange changed some probability, when known.
        transposition: Option<(usize, usize)>,
    },

    #[error("value iteration with discount 1 needs an iteration cap")]
    NonConvergent,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid model: {0}")]
    InvalidModel(ValidationReport),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("validation error in field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn capacity(what: impl Into<String>, required: impl ToString, cap: u64) -> Self {
        Error::CapacityExceeded {
            what: what.into(),
            required: required.to_string(),
            cap,
        }
    }

    /// Stable machine-readable code, used by the CLI on stderr.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ZeroProbabilityObservation => "E_ZERO_PROBABILITY",
            Error::CapacityExceeded { .. } => "E_CAPACITY",
            Error::RangeMismatch(_) => "E_RANGE",
            Error::NotLiftable { .. } => "E_NOT_LIFTABLE",
            Error::NonConvergent => "E_NON_CONVERGENT",
            Error::InvalidParams(_) => "E_PARAMS",
            Error::InvalidModel(_) => "E_INVALID_MODEL",
            Error::Parse { .. } => "E_PARSE",
            Error::Schema { .. } => "E_SCHEMA",
            Error::Validation { .. } => "E_VALIDATION",
            Error::Io(_) => "E_IO",
        }
    }

    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::CapacityExceeded { .. })
    }
}
