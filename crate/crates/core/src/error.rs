use thiserror::Error;

/// Errors raised by the geometric, algebraic and reconstruction routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("direction vector must be nonzero (and unit length where required), got norm {norm}")]
    InvalidDirection { norm: f64 },

    #[error("point with norm {norm} is not on the sphere of radius {k0}")]
    InvalidSpherePoint { norm: f64, k0: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid scan configuration: {0}")]
    InvalidConfig(String),

    #[error("point lies outside the domain of the coupling coefficient")]
    OutsideDomain,

    #[error("measurement direction is outside the beam support")]
    OutsideBeamSupport,

    #[error("coupling set is empty")]
    EmptyCouplingSet,

    #[error("vertex is degenerate (excluded measure-zero set)")]
    DegenerateVertex,

    #[error("component classification contradiction: {0}")]
    ClassificationContradiction(String),

    #[error("newton iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NewtonDiverged { residual: f64, iterations: usize },

    #[error("newton solution left the admissible domain")]
    LeftDomain,

    #[error("anchor directions are linearly dependent")]
    DegenerateAnchor,

    #[error("no parameter triple with |det| above {det_tol:e} found (best {best_abs_det:e})")]
    NotFound { best_abs_det: f64, det_tol: f64 },

    #[error("near-zero denominator in derived direction")]
    DegenerateDirection,

    #[error("2x2 coupling system is singular")]
    SingularPair,

    #[error("certificate verification failed: residual {residual:e}")]
    CertificateInvalid { residual: f64 },

    #[error("invalid slice: {0}")]
    InvalidSlice(String),

    #[error("unsupported dimension {0} for this operation")]
    UnsupportedDimension(usize),

    #[error("tabulated density: {0}")]
    Tabulated(String),
}

pub type Result<T> = std::result::Result<T, Error>;
