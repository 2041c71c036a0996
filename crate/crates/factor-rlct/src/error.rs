//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition (shape mismatch, empty list, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The unit ideal contains a zero exponent vector; the Newton-polyhedron
    /// machinery does not apply to it.
    #[error("unit ideal: RLCT machinery inapplicable")]
    UnitIdeal,

    /// A point handed to a face computation does not lie in the polyhedron.
    #[error("point is not contained in the Newton polyhedron")]
    PointNotInPolyhedron,

    /// A matrix that must be symmetric positive definite is not.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A covariance point was used without the provenance the operation needs.
    #[error("missing provenance: {0}")]
    MissingProvenance(String),

    /// Monte-Carlo estimate degenerated (e.g. every draw underflowed).
    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),

    /// Regression input does not determine a fit.
    #[error("degenerate regression design: {0}")]
    DegenerateFit(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
