use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{0}")]
    Core(#[from] incomplete_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        use incomplete_core::Error as E;
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Data(_) | CliError::Io(_) => ExitCode::from(3),
            CliError::Core(e) => match e {
                E::Config(_) | E::Domain(_) | E::Size(_) | E::InvalidCorrespondence(_) | E::CarrierMismatch(_) => {
                    ExitCode::from(2)
                }
                E::InvalidMeasure(_) => ExitCode::from(3),
                E::Numeric(_) | E::Internal(_) => ExitCode::FAILURE,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
