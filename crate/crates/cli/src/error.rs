use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] platoon_core::Error),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        use platoon_core::Error as E;
        match self {
            CliError::Read { .. } | CliError::Write { .. } => 1,
            CliError::Parse(_) | CliError::Validation(_) => 2,
            CliError::Core(e) => match e {
                E::NoConvergence { .. }
                | E::NotStabilizing
                | E::PairingFailed { .. }
                | E::NotConverged { .. }
                | E::NumericalBlowup { .. } => 3,
                _ => 2,
            },
        }
    }
}
