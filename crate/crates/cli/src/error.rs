//! CLI error taxonomy with a stable exit-code contract. A failing law is a
//! result, never an error; only tool failures exit nonzero.

use thiserror::Error;

/// Exit code for unreadable or unparseable scenario documents.
pub const EXIT_PARSE: i32 = 2;
/// Exit code for documents that parse but violate domain invariants.
pub const EXIT_VALIDATION: i32 = 3;
/// Exit code for failures while executing a requested check.
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("validation error: {message}")]
    Validation { message: String },

    #[error("unknown builtin scenario `{name}`")]
    UnknownScenario { name: String },

    #[error("unknown check `{name}`")]
    UnknownCheck { name: String },

    #[error("unknown sweep parameter `{name}`")]
    UnknownParameter { name: String },

    #[error("check `{check}` failed: {message}")]
    Check { check: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } => EXIT_PARSE,
            CliError::Validation { .. }
            | CliError::UnknownScenario { .. }
            | CliError::UnknownCheck { .. }
            | CliError::UnknownParameter { .. } => EXIT_VALIDATION,
            CliError::Check { .. } => EXIT_CHECK,
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        CliError::Validation {
            message: message.into(),
        }
    }
}

impl From<qtotal_core::Error> for CliError {
    fn from(err: qtotal_core::Error) -> Self {
        CliError::Validation {
            message: err.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
