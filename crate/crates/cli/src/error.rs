use beatlaser::Error;
use thiserror::Error as ThisError;

/// Command failure, mapped to the process exit code.
#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_) | Error::InvalidArgument(_) | Error::PhaseModeUnsupported(_) => {
                CliError::Config(e.to_string())
            }
            Error::Unstable(_)
            | Error::NonFinite { .. }
            | Error::TruncationOverflow { .. }
            | Error::FactorizationFailure(_)
            | Error::UnphysicalCovariance(_)
            | Error::DegenerateIntensity { .. } => CliError::Numerical(e.to_string()),
            Error::DimensionMismatch { .. } | Error::Io(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("json: {e}"))
    }
}
