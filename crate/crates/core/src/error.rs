use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid model space: {0}")]
    InvalidSpace(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tangent vector is not based at the given point")]
    MismatchedBase,
    #[error("degenerate plane: tangent vectors are linearly dependent")]
    DegeneratePlane,
    #[error("frame index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("frame is not orthonormal (Gram residual {0:.3e})")]
    InvalidFrame(f64),
    #[error("{what} did not converge (residual {residual:.3e})")]
    NoConvergence { what: &'static str, residual: f64 },
    #[error("invalid convex body: {0}")]
    InvalidBody(String),
    #[error("point lies on or inside the body; distance gradient undefined")]
    InsideBody,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("level {level} could not be bracketed along a ray ({detail})")]
    Bracketing { level: f64, detail: String },
    #[error("gradient vanishes (|grad| = {0:.3e})")]
    VanishingGradient(f64),
    #[error("inner body is not nested inside the outer body")]
    NotNested,
    #[error("degenerate surface data: {0}")]
    DegenerateSurface(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
