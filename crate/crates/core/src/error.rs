use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field grid {found:?} does not match grid {expected:?}")]
    GridMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("field has nonzero coefficients outside the resolved set (max |u| = {0:e})")]
    UnresolvedSupport(f64),

    #[error("order {requested} exceeds the configured bound {bound}")]
    OrderBound { requested: usize, bound: usize },

    #[error("polynomial size guard exceeded: {0} terms")]
    PolynomialTooLarge(usize),

    #[error("history: {0}")]
    History(String),

    #[error("plan: {0}")]
    Plan(String),

    #[error("classification: {0}")]
    Classification(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
