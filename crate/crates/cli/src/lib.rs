//! Config-driven front end for the `colony` binary.

pub mod commands;
pub mod config;
pub mod validate;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("model precondition failed: {0} ({0:?})")]
    Model(#[from] colony::Error),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 validation failure, 2 config error, 3 model precondition error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 1,
            Self::Config(_) | Self::Io { .. } | Self::Model(colony::Error::InvalidConfig(_)) => 2,
            Self::Model(_) => 3,
        }
    }
}
