use std::path::PathBuf;

/// Errors raised by the simulation, statistics and harness layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid ensemble: {0}")]
    Ensemble(String),

    #[error("ensemble of {count} trajectories is too small; need at least {needed}")]
    EnsembleTooSmall { count: usize, needed: usize },

    #[error("non-positive value {value} at index {index} in a logarithmic fit")]
    NonPositive { index: usize, value: f64 },

    #[error("fit window [{lo}, {hi}] contains {points} points; need at least 2")]
    EmptyWindow { lo: f64, hi: f64, points: usize },

    #[error("series too short: {len} entries, need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("missing regime parameter `{0}`")]
    MissingParameter(&'static str),

    #[error("regime parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error(
        "separation grid too coarse at t = {time}: integrand changes from {left} to {right} \
         between p- = {lo} and p- = {hi}"
    )]
    Coverage {
        time: usize,
        lo: f64,
        hi: f64,
        left: f64,
        right: f64,
    },

    #[error("separation grid must start at 0 and end at pi; got [{first}, {last}]")]
    GridRange { first: f64, last: f64 },

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
