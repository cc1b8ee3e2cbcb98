use std::io;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("degree {degree} outside the supported range [2, {max}]")]
    DegreeOutOfRange { degree: usize, max: usize },

    #[error("no elementary chart for variable degree {0}")]
    MissingElementaryChart(usize),

    #[error("threshold bracket [{lo}, {hi}] does not straddle the openness boundary")]
    BracketInvalid { lo: f64, hi: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("LP solver failure: {0}")]
    LpNumericalFailure(String),

    #[error("unrealizable degree distribution: {0}")]
    UnrealizableDistribution(String),

    #[error("{what} has rank {rank}, expected {expected}")]
    RankDeficient {
        what: &'static str,
        rank: usize,
        expected: usize,
    },

    #[error("vector is not a codeword of the primary code")]
    NotACodeword,

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
