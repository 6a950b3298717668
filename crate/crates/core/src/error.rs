use std::path::PathBuf;

use crate::PageId;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid {what}: {msg}")]
    Invalid { what: &'static str, msg: String },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("corpus generation failed: {0}")]
    Generation(String),

    #[error("relevance profile supports no ontology")]
    NoSupportedOntology,

    #[error("mean relevance {value} lies outside the span [{beta}, {alpha}]")]
    OutOfSpan { value: f64, alpha: f64, beta: f64 },

    #[error("{} page(s) have mean relevance outside [{beta}, {alpha}]: {p_ids:?}", p_ids.len())]
    SpanViolation {
        p_ids: Vec<PageId>,
        alpha: f64,
        beta: f64,
    },

    #[error("multilevel limit floor(n/m) is zero (n={n}, m={m}); need n >= m")]
    ZeroLimit { n: usize, m: usize },

    #[error("unsupported combination: {0}")]
    Combination(String),

    #[error("measurement failed: {0}")]
    Measurement(String),

    #[error("scenario shape check failed: {0}")]
    Shape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(what: &'static str, msg: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            msg: msg.into(),
        }
    }
}
