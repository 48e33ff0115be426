use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is numerically singular (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    #[error("problem too large for exhaustive enumeration: {0}")]
    SizeGuard(String),

    #[error("ℓ1 problem is infeasible: {0}")]
    Infeasible(String),

    #[error("solver hit the iteration limit ({iters} iterations)")]
    MaxIters { iters: usize },

    #[error("restricted isometry constant δ = {delta} is not below 1")]
    DegenerateRic { delta: f64 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Numerical failures as opposed to caller mistakes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::Infeasible(_)
                | Error::MaxIters { .. }
                | Error::DegenerateRic { .. }
        )
    }
}
