use std::path::PathBuf;

use thiserror::Error;

/// Everything that stops a run before its checks are evaluated (exit status 2).
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

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(transparent)]
    Library(#[from] carleson_kit::error::Error),
}

pub type CliResult<T> = Result<T, CliError>;
