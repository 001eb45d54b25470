//! Command-line laboratory around `interleave-lab-core`: configuration,
//! dataset loading, CSV reports, run manifests, and parallel execution of
//! harness work units.

pub mod commands;
pub mod config;
pub mod csvout;
pub mod dataio;
pub mod manifest;
pub mod parallel;

use std::fmt;

/// Failures surfaced to the CLI, split by exit code: validation problems
/// exit 1, I/O and parse problems exit 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    pub fn io(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}
