use std::path::PathBuf;

use thiserror::Error;

use crate::series::YearMonth;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("log transform of non-positive value {value} at {date}")]
    Domain { date: String, value: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("frequency error: {0}")]
    Frequency(String),

    #[error("series `{series}` does not cover {from}..{to}")]
    Alignment {
        series: String,
        from: YearMonth,
        to: YearMonth,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular design matrix: columns {columns:?} are linearly dependent")]
    SingularDesign { columns: Vec<usize> },

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("missing value at {date} in {path}")]
    MissingValue { path: String, date: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("series {role}: {source}")]
    Series {
        role: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage} stage: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("Monte Carlo aborted: {rejected} of {attempted} covariance draws rejected")]
    TooManyRejections { rejected: usize, attempted: usize },

    #[error("no cointegration: trace test selected rank 0, VECM not justified")]
    NoCointegration,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping stage and series wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::Series { source, .. } => source.root(),
            other => other,
        }
    }
}
