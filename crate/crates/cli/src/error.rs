//! CLI error taxonomy mapped onto process exit codes.

use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unparseable or inconsistent configuration / input data. Exit code 1.
    #[error("config error: {0}")]
    Config(String),
    /// Invariant violation, reported with the offending field. Exit code 1.
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },
    /// Filesystem failure. Exit code 2.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Validation { .. } => ExitCode::from(1),
            CliError::Io { .. } => ExitCode::from(2),
        }
    }
}

impl From<backlogsim_core::engine::SimError> for CliError {
    fn from(e: backlogsim_core::engine::SimError) -> Self {
        use backlogsim_core::engine::SimError;
        match &e {
            SimError::InvalidConfig { field, reason } => CliError::Validation {
                field: (*field).into(),
                reason: reason.clone(),
            },
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<backlogsim_core::game::GameError> for CliError {
    fn from(e: backlogsim_core::game::GameError) -> Self {
        use backlogsim_core::game::GameError;
        match e {
            GameError::Io(io) => CliError::Io {
                path: "<game output>".into(),
                source: io,
            },
            GameError::Sim(sim) => sim.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}
