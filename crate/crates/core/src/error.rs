use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the pipeline.
///
/// Each variant maps onto one of the process exit codes used by the CLI and
/// the status codes returned over the C ABI (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data (non-finite values, shape mismatches).
    #[error("invalid input: {0}")]
    Input(String),

    /// A parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Incompatible combination of options (e.g. sqrt wavelets with a Markov backend).
    #[error("configuration error: {0}")]
    Config(String),

    /// Coincident points make the k-th neighbour distance zero.
    #[error("degenerate kNN scale at point {index}: k-th neighbour distance is zero (duplicate points?)")]
    DegenerateScale { index: usize },

    /// A row of the affinity matrix sums to zero.
    #[error("point {index} is isolated (zero degree); kernel bandwidth too small")]
    IsolatedPoint { index: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Structured file parse failure. `location` is a byte offset or line reference.
    #[error("{path}: parse error at {location}: {message}")]
    Parse {
        path: String,
        location: String,
        message: String,
    },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// 0 success, 2 usage/config, 3 input data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Config(_) | Error::Write { .. } => 2,
            Error::Input(_) | Error::Parse { .. } | Error::Read { .. } | Error::DegenerateScale { .. } => 3,
            Error::IsolatedPoint { .. } | Error::Numerical(_) => 4,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            location: location.into(),
            message: message.into(),
        }
    }
}
