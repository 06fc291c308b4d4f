use std::io;
use std::path::PathBuf;

use corrfit_core::Error as CoreError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed, asymmetric or non-definite input.
    #[error("bad input: {0}")]
    BadInput(String),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("bad flags: {0}")]
    BadFlags(String),

    #[error("{0}")]
    NotCertifiable(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::BadInput(_) | CliError::Read { .. } | CliError::Write { .. } => 2,
            CliError::NotConverged(_) => 3,
            CliError::BadFlags(_) => 4,
            CliError::NotCertifiable(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::BadInput(_) => "bad-input",
            CliError::Read { .. } => "read-failure",
            CliError::Write { .. } => "write-failure",
            CliError::NotConverged(_) => "not-converged",
            CliError::BadFlags(_) => "bad-flags",
            CliError::NotCertifiable(_) => "not-certifiable",
        }
    }

    /// Classifies a library error raised while working on user data.
    pub fn from_data(e: CoreError) -> Self {
        match e {
            CoreError::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            _ => CliError::BadInput(e.to_string()),
        }
    }

    /// Classifies a library error raised while validating flag values.
    pub fn from_param(e: CoreError) -> Self {
        CliError::BadFlags(e.to_string())
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            error: &'a str,
            exit_code: u8,
            message: String,
        }
        serde_json::to_string(&Body {
            error: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        })
        .expect("plain strings serialize")
    }
}

pub type CliResult<T> = Result<T, CliError>;
