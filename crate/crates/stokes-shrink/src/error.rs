//! Error types shared across the toolkit.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("nonpositive or inconsistent radius: {0}")]
    NonpositiveRadius(String),
    #[error("geometry hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("unknown region tag `{0}`")]
    UnknownTag(String),
    #[error("radial truncation too small: {0}")]
    TruncationTooSmall(String),
    #[error("quadrature not resolved: {0}")]
    QuadratureFailure(String),
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("eigensolver failed to converge: {0}")]
    ConvergenceFailure(String),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("degenerate trace system: {0}")]
    DegenerateTraceSystem(String),
    #[error("region outside the expansion domain: {0}")]
    RegionOutsideDomain(String),
    #[error("zero function where a nonzero one is required: {0}")]
    ZeroFunction(String),
    #[error("field is not in the vorticity space V0: {0}")]
    NotInV0(String),
    #[error("angular mode truncation insufficient: {0}")]
    ModeTruncationInsufficient(String),
    #[error("eigenvalue group dimension mismatch: {0}")]
    GroupMismatch(String),
    #[error("eigenbasis expansion tail too large: {0}")]
    TailTooLarge(String),
    #[error("time step rejected: {0}")]
    StepRejected(String),
    #[error("cutoff support intersects the hole: {0}")]
    SupportViolation(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("unknown command `{0}`")]
    CommandUnknown(String),
    #[error("cache entry corrupt: {0}")]
    CacheCorrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
