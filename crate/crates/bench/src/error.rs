use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] balm::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ITERATION_LIMIT: i32 = 3;

impl BenchError {
    pub fn usage(msg: impl Into<String>) -> Self {
        BenchError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Solver(balm::Error::NotConverged { .. }) => EXIT_ITERATION_LIMIT,
            BenchError::Solver(balm::Error::Infeasible(_) | balm::Error::Factorization { .. }) => EXIT_CHECK_FAILED,
            _ => EXIT_USAGE,
        }
    }
}
