use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh: {0}")]
    Mesh(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("coefficients: {0}")]
    Coefficient(String),

    #[error("invalid input: {0}")]
    Domain(String),

    #[error("linear solve failed: {message} (achieved relative residual {residual:.3e})")]
    LinearSolve { message: String, residual: f64 },

    #[error("eigensolver: {0}")]
    Eigen(String),

    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at_level(self, level: usize) -> Self {
        match self {
            e @ Error::Level { .. } => e,
            e => Error::Level {
                level,
                source: Box::new(e),
            },
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Coefficient(_) | Error::Parse { .. } | Error::Mesh(_) => 2,
            Error::Io { .. } => 4,
            Error::Level { source, .. } => source.exit_code(),
            Error::Domain(_) | Error::LinearSolve { .. } | Error::Eigen(_) => 3,
        }
    }
}
