use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

/// Errors raised anywhere in the hedging pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("parse error at row {row}: {message}")]
    ParseError { row: usize, message: String },

    #[error("non-positive price {price} at row {row}")]
    NonPositivePrice { row: usize, price: f64 },

    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("date sets do not intersect")]
    EmptyIntersection,

    #[error("frequency mismatch: {0} vs {1}")]
    FrequencyMismatch(usize, usize),

    #[error("split date {split} outside sample range {first}..={last}")]
    SplitOutOfRange {
        split: NaiveDate,
        first: NaiveDate,
        last: NaiveDate,
    },

    #[error("singular regression: {0}")]
    SingularRegression(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("covariance matrix not positive definite at t={0}")]
    NonPdMatrix(usize),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid kurtosis kappa={0} (must exceed 1)")]
    InvalidKappa(f64),

    #[error("no real root for aggregated beta: r={r} (|r| must be <= 1/2), a={a}, b={b}, persistence^h={persistence_h}")]
    NoRealRoot {
        r: f64,
        a: f64,
        b: f64,
        persistence_h: f64,
    },

    #[error("no base date precedes target period ending {0}")]
    NoPrecedingBaseDate(NaiveDate),

    #[error("date mismatch: {0}")]
    DateMismatch(String),

    #[error("need at least {needed} observations for the tail, got {got}")]
    TooShortForTail { needed: usize, got: usize },

    #[error("unhedged risk is not positive: {0}")]
    ZeroBaselineRisk(String),

    #[error("need at least {needed} blocks, got {got}")]
    TooFewBlocks { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("[asset={asset} horizon={horizon} stage={stage}] {source}")]
    Stage {
        asset: String,
        horizon: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
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

    /// Wraps an error with the (asset, horizon, stage) context of the pipeline.
    pub fn in_stage(self, asset: &str, horizon: usize, stage: &'static str) -> Self {
        match self {
            // keep the innermost context
            e @ Error::Stage { .. } => e,
            other => Error::Stage {
                asset: asset.to_string(),
                horizon,
                stage,
                source: Box::new(other),
            },
        }
    }

    /// Pipeline stage the error was raised in, if known.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    /// The error underneath any stage context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
