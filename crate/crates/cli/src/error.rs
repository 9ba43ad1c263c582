use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Core { context: String, source: motif::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Config { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn core(context: impl std::fmt::Display, source: impl Into<motif::Error>) -> Self {
        CliError::Core { context: context.to_string(), source: source.into() }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core { source, .. } => source.code(),
            CliError::Io { source, .. } => motif::io_code(source),
            CliError::Config { .. } => "InvalidConfig",
            CliError::Json { .. } => "ParseError",
            CliError::Invalid(_) => "InvalidArgument",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a> {
    pub error: ErrorBody<'a>,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody<'a> {
    pub code: &'a str,
    pub message: String,
}

impl<'a> From<&'a CliError> for Envelope<'a> {
    fn from(e: &'a CliError) -> Self {
        Envelope { error: ErrorBody { code: e.code(), message: e.to_string() } }
    }
}
