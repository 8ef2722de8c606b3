use std::path::PathBuf;

use thiserror::Error;

/// Input errors: the scenario could not be read, parsed or turned into a
/// model. All of them map to exit code 2.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("scenario has no [{0}] section, which this command requires")]
    MissingSection(&'static str),
    #[error("invalid value for {field}: {message}")]
    Schema { field: String, message: String },
    #[error("cannot build {stage}: {source}")]
    Model { stage: &'static str, source: esm_core::Error },
}

impl VerifyError {
    pub fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        VerifyError::Schema { field: field.into(), message: message.into() }
    }

    pub fn model(stage: &'static str) -> impl FnOnce(esm_core::Error) -> Self {
        move |source| VerifyError::Model { stage, source }
    }
}

pub type Result<T> = std::result::Result<T, VerifyError>;
