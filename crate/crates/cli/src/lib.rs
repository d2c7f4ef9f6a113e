//! Library surface of the experiment runner: configuration, the Monte Carlo
//! sweep loop, results documents, and the bound-checking command.

pub mod bounds;
pub mod config;
pub mod report;
pub mod runner;

use thiserror::Error;

/// Command errors mapped onto process exit codes: validation problems exit 1,
/// runtime failures exit 2, and bound violations exit 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error("bound violation: at least one conditional-rate bound failed")]
    BoundViolation,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 1,
            Self::Runtime(_) => 2,
            Self::BoundViolation => 3,
        }
    }
}
