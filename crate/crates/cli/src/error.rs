use std::io;
use std::path::{Path, PathBuf};

use solesense::analysis::AnalysisError;
use solesense::sensor::CalibrationError;
use solesense::session::SessionError;
use solesense::telemetry::EmitError;
use thiserror::Error;

/// Command failure, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Network(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Network(_) => 4,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn data(context: &Path) -> impl FnOnce(String) -> CliError + '_ {
        move |msg| CliError::Data(format!("{}: {msg}", context.display()))
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Io { path, source } => CliError::Io { path, source },
            SessionError::Stream(source) => CliError::Io {
                path: PathBuf::from("<stream>"),
                source,
            },
            SessionError::Parse { .. } => CliError::Data(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EmitError> for CliError {
    fn from(e: EmitError) -> Self {
        match e {
            EmitError::Exhausted { .. } => CliError::Network(e.to_string()),
            EmitError::Frame(_) | EmitError::Unordered { .. } => CliError::Data(e.to_string()),
        }
    }
}

pub fn calibration_error(path: &Path, e: CalibrationError) -> CliError {
    match e {
        CalibrationError::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::Data(format!("{}: {other}", path.display())),
    }
}
