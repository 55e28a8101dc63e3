use thiserror::Error;

use crate::simsw::Trajectory;
use crate::switchsig::ModeId;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("unsupported norm: {0}")]
    UnsupportedNorm(String),

    #[error("no exact transaction coefficient for the pair {from} -> {to}")]
    UnsupportedPair { from: String, to: String },

    #[error("unsupported graph: {0}")]
    UnsupportedGraph(String),

    #[error("time {t} is outside the signal domain [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },

    #[error("missing bound for mode {0}")]
    MissingAlpha(ModeId),

    #[error("missing transaction coefficient for switch {0} -> {1}")]
    MissingBeta(ModeId, ModeId),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("state norm exceeded the divergence guard at t = {at}")]
    Diverged { at: f64, partial: Box<Trajectory> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
