//! Error type shared by every analysis stage.

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading panels or running an analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("non-positive close {close} for {ticker} on {date} (line {line})")]
    NonPositivePrice {
        line: u64,
        date: String,
        ticker: String,
        close: f64,
    },

    #[error("ticker {0} appears in the sector map but has no prices")]
    UnknownTicker(String),

    #[error("ticker {0} has prices but no sector assignment")]
    MissingSector(String),

    #[error("duplicate price row for {ticker} on {date}")]
    DuplicateRow { ticker: String, date: String },

    #[error("no date is shared by every ticker")]
    EmptyIntersection,

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("zero variance for {ticker} in window ending at t={t}")]
    ZeroVariance { ticker: String, t: usize },

    #[error("window of {window} rows ending at t={t} does not fit a panel of {rows} rows")]
    WindowOutOfRange { window: usize, t: usize, rows: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("symmetric eigensolver did not converge")]
    EigenNonConvergence,

    #[error("sector {0} has fewer than two assets")]
    DegenerateSector(String),

    #[error("distance matrix contains a non-finite entry at ({0}, {1})")]
    NonFiniteDistance(usize, usize),

    #[error("segment [{start}, {end}) is too short: {message}")]
    ShortSegment {
        start: usize,
        end: usize,
        message: String,
    },

    #[error("Newton iteration for segment [{start}, {end}) did not converge after {iterations} steps")]
    NewtonNonConvergence {
        start: usize,
        end: usize,
        iterations: usize,
    },

    #[error("negative Hessian for segment [{start}, {end}) is not positive definite")]
    NotPositiveDefinite { start: usize, end: usize },

    #[error("empty chain")]
    EmptyChain,

    #[error("distribution does not sum to one (sum = {0})")]
    Unnormalized(f64),

    #[error("empty distribution set {0}")]
    EmptySet(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
