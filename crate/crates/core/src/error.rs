use std::path::PathBuf;

use thiserror::Error;

use crate::ingest::Side;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    #[error("insufficient data: {bins} bins, at least {required} required")]
    InsufficientData { bins: usize, required: usize },

    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),

    #[error("no {0} records")]
    EmptySide(Side),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("simplex stalled after {pivots} pivots")]
    SolverStall { pivots: usize },

    #[error("copula linear program is infeasible")]
    EstimationInfeasible,

    #[error("copula linear program is unbounded; nonnegativity constraints are missing")]
    ModelUnbounded,
}

pub type Result<T> = std::result::Result<T, Error>;
