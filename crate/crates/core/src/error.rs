use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least 4 cells, got {0}")]
    GridTooSmall(usize),

    #[error("field length {got} does not match grid with {expected} cells")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at cell {0}")]
    NonFinite(usize),

    #[error("nonpositive density at cell {0}")]
    NonPositive(usize),

    #[error("alpha out of range (0,1]: {0}")]
    AlphaOutOfRange(f64),

    #[error("mode exceeds n/4: k={k} on a grid with {n_cells} cells")]
    ModeTooHigh { k: usize, n_cells: usize },

    #[error("beta out of range [0,1]: {0}")]
    BetaOutOfRange(f64),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("positivity violated at cell {cell}")]
    PositivityViolated { cell: usize },

    #[error("newton did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("at t={t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("study level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("not enough snapshots: need {needed}, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },

    #[error("rate fit: {0}")]
    RateFit(String),

    #[error("config: {0}")]
    Config(String),

    #[error("plot: {0}")]
    Plot(String),

    #[error("nonpositive value on log axis")]
    LogAxis,

    #[error("malformed csv {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used for CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Runtime,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::GridTooSmall(_)
            | Error::LengthMismatch { .. }
            | Error::NonFinite(_)
            | Error::NonPositive(_)
            | Error::AlphaOutOfRange(_)
            | Error::ModeTooHigh { .. }
            | Error::BetaOutOfRange(_)
            | Error::InvalidProblem(_)
            | Error::Config(_) => ErrorKind::Config,
            Error::Io { .. } | Error::Csv { .. } => ErrorKind::Io,
            Error::AtTime { source, .. } | Error::AtLevel { source, .. } => match source.kind() {
                ErrorKind::Io => ErrorKind::Io,
                _ => ErrorKind::Runtime,
            },
            _ => ErrorKind::Runtime,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
