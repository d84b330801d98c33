use std::path::PathBuf;

use thiserror::Error;

use crate::bench::RunTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op}: input contains non-finite entries")]
    NonFinite { op: &'static str },

    #[error("{op}: input matrix is zero")]
    ZeroInput { op: &'static str },

    #[error("rank {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not representable: {0}")]
    NotRepresentable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("run diverged at iteration {iteration} (loss {loss:e})")]
    Diverged {
        iteration: usize,
        loss: f64,
        trace: Box<RunTrace>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    /// True for errors caused by bad caller input rather than by the computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Parse(_)
                | Error::RankOutOfRange { .. }
                | Error::NotRepresentable(_)
                | Error::ShapeMismatch { .. }
        )
    }
}
