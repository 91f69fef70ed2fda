//! Errors with process exit-code semantics: 2 for configuration problems,
//! 3 for protocol violations, 4 for I/O.

use bandit_core::env::{PlanError, ProtocolError};
use bandit_core::learners::LearnerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("client aborted: {0}")]
    ClientAbort(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {what} ({path}): {detail}")]
    Format {
        what: &'static str,
        path: String,
        detail: String,
    },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Eval(#[from] bandit_core::eval::EvalError),
}

impl ArenaError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        ArenaError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        ArenaError::Config(msg.into())
    }

    /// CLI exit code: 0 success, 2 config error, 3 protocol violation,
    /// 4 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ArenaError::Config(_) | ArenaError::Plan(_) | ArenaError::Learner(_) => 2,
            ArenaError::Protocol(_) | ArenaError::ClientAbort(_) => 3,
            ArenaError::Io { .. } | ArenaError::Format { .. } => 4,
            ArenaError::Eval(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, ArenaError>;
