use std::io;
use std::path::{Path, PathBuf};

use evrank::eval::EvalError;
use evrank::index::{EmbedError, IndexError};
use evrank::priors::graph::GraphError;
use evrank::priors::layout::LayoutError;
use evrank::{PriorError, RankError};
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const INPUT_CONTRACT: i32 = 2;
    pub const MISSING_DEPENDENCY: i32 = 3;
    pub const TRANSPORT: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Record { path: PathBuf, line: usize, message: String },
    #[error("{}: input is empty", path.display())]
    EmptyInput { path: PathBuf },
    #[error("{0}")]
    Contract(String),
    #[error("{0}")]
    MissingDependency(String),
    #[error("{0}")]
    Transport(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn record(path: &Path, line: usize, message: impl Into<String>) -> Self {
        CliError::Record {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingDependency(_) => exit::MISSING_DEPENDENCY,
            CliError::Transport(_) => exit::TRANSPORT,
            _ => exit::INPUT_CONTRACT,
        }
    }
}

macro_rules! contract_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Contract(e.to_string())
            }
        })*
    };
}

contract_from!(IndexError, EvalError, GraphError, LayoutError, RankError, evrank::config::ConfigError);

impl From<PriorError> for CliError {
    fn from(e: PriorError) -> Self {
        CliError::MissingDependency(e.to_string())
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::TransportError(_) | EmbedError::MalformedResponse(_) => CliError::Transport(e.to_string()),
            other => CliError::Contract(other.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
