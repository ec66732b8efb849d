use std::io;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, parameters or input files; exit code 2.
    #[error("{0}")]
    Usage(String),
    #[error("ontology not found: {0}")]
    OntologyNotFound(String),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Pipeline(#[from] ontoclust::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::OntologyNotFound(_) | CliError::Input { .. } => {
                ExitCode::from(2)
            }
            CliError::Read { .. } | CliError::Write { .. } | CliError::Pipeline(_) => {
                ExitCode::from(1)
            }
        }
    }
}

pub fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}
