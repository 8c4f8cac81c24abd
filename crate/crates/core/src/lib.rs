//! Blow-up construction of a carpet homeomorphism from a hyperbolic toral
//! automorphism, with measure and specification experiments.

pub mod blowup;
pub mod flow;
pub mod measure;
pub mod rng;
pub mod space;
pub mod specification;
pub mod sphere;
pub mod toral;

/// Errors raised by the measure and specification tools.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Toral(#[from] toral::ToralError),
    #[error(transparent)]
    Sphere(#[from] sphere::SphereError),
    #[error(transparent)]
    Blowup(#[from] blowup::BlowupError),
    #[error("measures live on different spaces: {0:?} vs {1:?}")]
    SpaceMismatch(space::SpaceKind, space::SpaceKind),
    #[error("orbit is empty")]
    EmptyOrbit,
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid region: {0}")]
    RegionInvalid(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("parameter violations: {}", .0.join("; "))]
    ParameterViolations(Vec<String>),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
