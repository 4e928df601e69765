use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Every failure the core algorithms can report.
///
/// Variants are grouped so that front ends can map them onto exit codes:
/// input problems, planning impossibility, and numeric/model failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("grid has no interior nodes for this region and spacing")]
    EmptyGrid,
    #[error("no launch point lies within {tolerance_m} m of a grid node")]
    NoLaunchPoint { tolerance_m: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unknown transect ids: {}", .0.join(", "))]
    UnknownTransects(Vec<String>),
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("model is not identifiable: {0}")]
    NonIdentifiable(String),
    #[error("optimizer did not converge (best log-likelihood {best_loglik})")]
    NonConvergence { best_loglik: f64 },
    #[error("rank-deficient design: {0}")]
    RankDeficient(String),
    #[error("p-value undefined: {0}")]
    PUndefined(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
