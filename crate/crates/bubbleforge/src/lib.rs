//! Reproducible command-line runs over `bubbleforge-core`: reduced-energy
//! constants, the concentration scale, energy scans and verification suites,
//! written as JSON or CSV reports.

pub mod commands;
pub mod exec;
pub mod params;
pub mod report;
pub mod suites;

use bubbleforge_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_) | CoreError::Domain(_) | CoreError::NoRoot { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub use params::RunParams;
pub use report::{Check, Provenance, Report};
pub use suites::Suite;
