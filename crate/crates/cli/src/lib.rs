//! Library side of the experiment runner, kept separate from the
//! binary so integration tests can exercise the commands and formats
//! directly.

pub mod commands;
pub mod config;
pub mod csv_io;

use std::fmt;

/// Command-level failures, carrying the process exit code: 1 for
/// configuration problems, 2 for data problems, 3 for numerical
/// failures.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}
