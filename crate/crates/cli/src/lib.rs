//! Library surface of the batch runner, exposed for the binary and the
//! integration tests.

use std::path::PathBuf;

pub mod config;
pub mod output;
pub mod runner;
pub mod validate;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] config::ConfigError),
    #[error("run failed: {0}")]
    Engine(#[from] mcwf::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Malformed(String),
}

impl CliError {
    /// Distinct exit codes: 2 config, 3 engine/guard, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Malformed(_) => 2,
            CliError::Engine(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}
