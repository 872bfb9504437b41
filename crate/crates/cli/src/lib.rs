//! Command implementations behind the `arrayscat` binary. Each command maps
//! a [`RunConfig`] to in-memory artifacts; only `main` touches the disk.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

pub use config::{Format, RunConfig};
pub use output::{Artifact, Table};

use arrayscat::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 configuration, 3 convergence failure, 4 verification failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(Error::InvalidLattice(_) | Error::InvalidInput(_) | Error::Unsupported(_)) => 2,
            CliError::Compute(Error::Quadrature { .. } | Error::LatticeSumConvergence { .. }) => 3,
            CliError::Verification(_) => 4,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        let q = Error::Quadrature { error: 1.0, tolerance: 0.1, detail: String::new() };
        assert_eq!(CliError::from(q).exit_code(), 3);
        assert_eq!(CliError::from(Error::LatticeSumConvergence { residual: 1.0, shells: 3 }).exit_code(), 3);
        assert_eq!(CliError::Verification("x".into()).exit_code(), 4);
        assert_eq!(CliError::from(Error::SingularTMatrix(0.0)).exit_code(), 1);
    }
}
