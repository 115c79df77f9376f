use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("remeshing failed: {0}")]
    RemeshingFailure(String),
    #[error("boundary polyline is not simple: {0}")]
    NonSimpleBoundary(String),
    #[error("annulus degenerated: minimum cross-section circumference {min_circumference:.3e}")]
    AnnulusDegeneration { min_circumference: f64 },
    #[error("radius {radius} too small: boundary curve leaves the hull band by {violation:.3e}")]
    RadiusTooSmall { radius: f64, violation: f64 },
}
