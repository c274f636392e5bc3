//! Top-level error with process exit codes.

use thiserror::Error;

use crate::config::ConfigError;
use crate::meanfield::MeanFieldError;
use crate::output::OutputError;
use crate::sweep::SweepError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PHYSICS: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    MeanField(#[from] MeanFieldError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(ConfigError::Io { .. }) => EXIT_IO,
            Error::Config(_) | Error::Usage(_) => EXIT_CONFIG,
            Error::Sweep(SweepError::Spec(_) | SweepError::Point(_)) => EXIT_CONFIG,
            Error::Sweep(SweepError::AllUnstable(_)) | Error::MeanField(_) => EXIT_PHYSICS,
            Error::Output(OutputError::MissingColumn(_)) => EXIT_CONFIG,
            Error::Output(_) => EXIT_IO,
        }
    }
}
