//! Finite stages of the blow-up tower over the sphere factor.
//!
//! Stage `S_n` replaces every point of the first `n` selected periodic orbits
//! by a circle of directions. Geometrically each blown point `c` becomes a
//! round hole of radius `R` in the pillowcase metric, and a collar of radius
//! `kR` around it is the region where the extended map differs from the
//! factor map. The collapse map `Pi_n: S_n -> S^2` squeezes each collar
//! annulus `R <= r <= kR` radially onto the disc `r <= kR`, sending the hole
//! boundary to `c`; the stage map is then `H_n = Pi_n^-1 o G o Pi_n`, which on
//! the boundary circles is exactly the projective action of the derivative.
//!
//! This is a metric realization of a topological construction: the radii and
//! collars are choices, not part of the limit object.

mod direction;
mod invariants;
mod plan;
mod stage;

use thiserror::Error;

use crate::toral::ToralError;

pub use direction::{
    angle_difference, direction_map, direction_map_derivative, fixed_angles, is_invariant_slope, signed_direction_map,
    wrap_angle, FixedAngle,
};
pub use invariants::{carpet_invariants, density_fraction, CarpetReport, DensityPoint};
pub use plan::{plan_orbits, sphere_orbit, OrbitPlan, PlannedOrbit};
pub use stage::{
    apply_stage, build_stage, project_stage, same_point, BlownOrbit, CarpetStage, CollarHit,
    ExtendedPoint, OrbitRecord, RadiusSchedule, StageDocument, STAGE_FORMAT, STAGE_VERSION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlowupError {
    #[error(transparent)]
    Toral(#[from] ToralError),
    #[error("max_period must be at least 1, got {0}")]
    InvalidMaxPeriod(i64),
    #[error("depth {requested} needs {requested} selected orbits but only {available} are available up to period {max_period}")]
    NotEnoughOrbits {
        requested: usize,
        available: usize,
        max_period: i64,
    },
    #[error("no positive radius keeps orbit {orbit} disjoint from earlier holes and branch points (slack {slack})")]
    ScheduleInfeasible { orbit: usize, slack: f64 },
    #[error("invalid radius schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid point for this stage: {0}")]
    InvalidPoint(String),
    #[error("complement of the holes is not connected on a {0}x{0} grid")]
    Disconnected(usize),
    #[error("invalid stage document: {0}")]
    Format(String),
}
