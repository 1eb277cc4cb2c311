use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("density is not normalizable: {0}")]
    NonNormalizable(String),
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("accuracy not reached: best estimate {estimate:e} with error {error:e}")]
    AccuracyNotReached { estimate: f64, error: f64 },
    #[error("no root found: {0}")]
    NoRoot(String),
    #[error("loss derivative is singular at t = {0}")]
    Singularity(f64),
    #[error("estimator does not exist: {0}")]
    Existence(String),
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Config,
    Assumption,
    Existence,
    Accuracy,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 1,
            ErrorClass::Assumption => 2,
            ErrorClass::Existence => 3,
            ErrorClass::Accuracy => 4,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) | Error::Serialization(_) => ErrorClass::Config,
            Error::InternalConsistency(_) => ErrorClass::Assumption,
            Error::NonNormalizable(_)
            | Error::Divergent(_)
            | Error::NoRoot(_)
            | Error::Singularity(_)
            | Error::Existence(_) => ErrorClass::Existence,
            Error::AccuracyNotReached { .. } => ErrorClass::Accuracy,
        }
    }

    /// Process exit code for this class of error.
    pub fn exit_code(&self) -> i32 {
        self.class().exit_code()
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
