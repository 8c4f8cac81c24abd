//! Metric spaces and maps shared by the measure and specification tools.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::blowup::{CarpetStage, ExtendedPoint};
use crate::sphere::{factor_apply, project, sphere_metric, FloatSpherePoint};
use crate::toral::{ToralAutomorphism, TorusPoint};
use crate::Error;

/// Which space a measure lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    Torus,
    Sphere,
    Stage { depth: usize },
}

pub trait MetricSpace: Sync {
    type Point: Clone + Debug + Send + Sync;

    fn kind(&self) -> SpaceKind;
    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;
    /// Canonical form used to merge equal points.
    fn key(&self, p: &Self::Point) -> PointKey;
}

/// Bit pattern of a point's canonical coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointKey {
    Plane(u64, u64),
    Circle(usize, usize, u64),
}

fn plane_key(p: &TorusPoint) -> PointKey {
    // 0.0 and -0.0 are the same point
    PointKey::Plane((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TorusSpace;

impl MetricSpace for TorusSpace {
    type Point = TorusPoint;

    fn kind(&self) -> SpaceKind {
        SpaceKind::Torus
    }

    fn distance(&self, a: &TorusPoint, b: &TorusPoint) -> f64 {
        a.torus_distance(b)
    }

    fn key(&self, p: &TorusPoint) -> PointKey {
        plane_key(p)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SphereSpace;

impl MetricSpace for SphereSpace {
    type Point = FloatSpherePoint;

    fn kind(&self) -> SpaceKind {
        SpaceKind::Sphere
    }

    fn distance(&self, a: &FloatSpherePoint, b: &FloatSpherePoint) -> f64 {
        sphere_metric(a, b)
    }

    fn key(&self, p: &FloatSpherePoint) -> PointKey {
        plane_key(p.rep())
    }
}

/// A stage with the metric of its embedding in the pillowcase.
#[derive(Clone, Copy, Debug)]
pub struct StageSpace<'a> {
    pub stage: &'a CarpetStage,
}

impl MetricSpace for StageSpace<'_> {
    type Point = ExtendedPoint;

    fn kind(&self) -> SpaceKind {
        SpaceKind::Stage {
            depth: self.stage.depth(),
        }
    }

    fn distance(&self, a: &ExtendedPoint, b: &ExtendedPoint) -> f64 {
        self.stage.distance(a, b)
    }

    fn key(&self, p: &ExtendedPoint) -> PointKey {
        match p {
            ExtendedPoint::Regular(s) => plane_key(s.rep()),
            ExtendedPoint::Boundary { orbit, index, angle } => {
                PointKey::Circle(*orbit, *index, (angle + 0.0).to_bits())
            }
        }
    }
}

/// A map of a metric space to itself.
pub trait DynamicalSystem: Sync {
    type Space: MetricSpace;

    fn space(&self) -> &Self::Space;
    fn step(&self, p: &<Self::Space as MetricSpace>::Point)
        -> Result<<Self::Space as MetricSpace>::Point, Error>;

    fn orbit(
        &self,
        start: &<Self::Space as MetricSpace>::Point,
        n: usize,
    ) -> Result<Vec<<Self::Space as MetricSpace>::Point>, Error> {
        let mut out = Vec::with_capacity(n);
        let mut cur = start.clone();
        for _ in 0..n {
            let next = self.step(&cur)?;
            out.push(std::mem::replace(&mut cur, next));
        }
        Ok(out)
    }
}

/// The automorphism acting on floating torus points.
#[derive(Clone, Copy, Debug)]
pub struct TorusMap {
    pub aut: ToralAutomorphism,
    space: TorusSpace,
}

impl TorusMap {
    pub fn new(aut: ToralAutomorphism) -> Self {
        Self {
            aut,
            space: TorusSpace,
        }
    }
}

impl DynamicalSystem for TorusMap {
    type Space = TorusSpace;

    fn space(&self) -> &TorusSpace {
        &self.space
    }

    fn step(&self, p: &TorusPoint) -> Result<TorusPoint, Error> {
        Ok(self.aut.apply_f64(p))
    }
}

/// The factor map on the pillowcase.
#[derive(Clone, Copy, Debug)]
pub struct SphereMap {
    pub aut: ToralAutomorphism,
    space: SphereSpace,
}

impl SphereMap {
    pub fn new(aut: ToralAutomorphism) -> Self {
        Self {
            aut,
            space: SphereSpace,
        }
    }
}

impl DynamicalSystem for SphereMap {
    type Space = SphereSpace;

    fn space(&self) -> &SphereSpace {
        &self.space
    }

    fn step(&self, p: &FloatSpherePoint) -> Result<FloatSpherePoint, Error> {
        Ok(factor_apply(&self.aut, p))
    }
}

/// The stage homeomorphism `H_n`.
#[derive(Clone, Copy, Debug)]
pub struct StageMap<'a> {
    space: StageSpace<'a>,
}

impl<'a> StageMap<'a> {
    pub fn new(stage: &'a CarpetStage) -> Self {
        Self {
            space: StageSpace { stage },
        }
    }

    pub fn stage(&self) -> &'a CarpetStage {
        self.space.stage
    }
}

impl<'a> DynamicalSystem for StageMap<'a> {
    type Space = StageSpace<'a>;

    fn space(&self) -> &StageSpace<'a> {
        &self.space
    }

    fn step(&self, p: &ExtendedPoint) -> Result<ExtendedPoint, Error> {
        Ok(self.space.stage.apply(p)?)
    }
}

/// The `power`-th iterate of a system.
#[derive(Clone, Copy, Debug)]
pub struct Power<S> {
    pub inner: S,
    pub power: usize,
}

impl<S: DynamicalSystem> DynamicalSystem for Power<S> {
    type Space = S::Space;

    fn space(&self) -> &S::Space {
        self.inner.space()
    }

    fn step(
        &self,
        p: &<S::Space as MetricSpace>::Point,
    ) -> Result<<S::Space as MetricSpace>::Point, Error> {
        let mut cur = p.clone();
        for _ in 0..self.power {
            cur = self.inner.step(&cur)?;
        }
        Ok(cur)
    }
}

/// Exact iteration of an automorphism on the dyadic grid `2^-64 Z^2`, using
/// wrapping `u64` arithmetic. Floating iteration of a hyperbolic map loses one
/// bit per step or so; this orbit is a genuine orbit of a dyadic point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicTorusMap {
    m: [[u64; 2]; 2],
    space: DyadicSpace,
}

pub type DyadicPoint = [u64; 2];

/// The torus with points stored as `2^-64`-fixed-point coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DyadicSpace;

impl MetricSpace for DyadicSpace {
    type Point = DyadicPoint;

    fn kind(&self) -> SpaceKind {
        SpaceKind::Torus
    }

    fn distance(&self, a: &DyadicPoint, b: &DyadicPoint) -> f64 {
        DyadicTorusMap::to_torus(*a).torus_distance(&DyadicTorusMap::to_torus(*b))
    }

    fn key(&self, p: &DyadicPoint) -> PointKey {
        PointKey::Plane(p[0], p[1])
    }
}

impl DynamicalSystem for DyadicTorusMap {
    type Space = DyadicSpace;

    fn space(&self) -> &DyadicSpace {
        &self.space
    }

    fn step(&self, p: &DyadicPoint) -> Result<DyadicPoint, Error> {
        Ok(self.advance(*p))
    }
}

impl DyadicTorusMap {
    pub fn new(aut: &ToralAutomorphism) -> Self {
        let r = aut.matrix().rows();
        // entries modulo 2^64; negative entries wrap to their residues
        let w = |v: i128| v as u64;
        Self {
            m: [[w(r[0][0]), w(r[0][1])], [w(r[1][0]), w(r[1][1])]],
            space: DyadicSpace,
        }
    }

    pub fn advance(&self, p: DyadicPoint) -> DyadicPoint {
        let [[a, b], [c, d]] = self.m;
        [
            a.wrapping_mul(p[0]).wrapping_add(b.wrapping_mul(p[1])),
            c.wrapping_mul(p[0]).wrapping_add(d.wrapping_mul(p[1])),
        ]
    }

    pub fn from_unit(x: f64, y: f64) -> DyadicPoint {
        let conv = |v: f64| (crate::toral::wrap_unit(v) * 18446744073709551616.0) as u64;
        [conv(x), conv(y)]
    }

    pub fn to_torus(p: DyadicPoint) -> TorusPoint {
        let s = 1.0 / 18446744073709551616.0;
        TorusPoint::new(p[0] as f64 * s, p[1] as f64 * s)
    }
}

/// Uniform torus point pushed to the sphere.
pub fn project_uniform(x: f64, y: f64) -> FloatSpherePoint {
    project(&TorusPoint::new(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toral::RationalTorusPoint;

    #[test]
    fn dyadic_map_is_exact_on_dyadic_rationals() {
        let cat = ToralAutomorphism::cat_map();
        let dm = DyadicTorusMap::new(&cat);
        // (1/4, 3/8) as a dyadic point, compared with exact rational iteration
        let mut p = DyadicTorusMap::from_unit(0.25, 0.375);
        let mut q: RationalTorusPoint = "1/4,3/8".parse().unwrap();
        for _ in 0..20 {
            p = dm.advance(p);
            q = cat.apply(&q);
            assert_eq!(DyadicTorusMap::to_torus(p), q.to_f64());
        }
    }

    #[test]
    fn negative_entries_wrap_correctly() {
        let inv = ToralAutomorphism::cat_map().inverse();
        let dm = DyadicTorusMap::new(&inv);
        let fwd = DyadicTorusMap::new(&ToralAutomorphism::cat_map());
        let p = [0x1234_5678_9abc_def0, 0x0fed_cba9_8765_4321];
        assert_eq!(dm.advance(fwd.advance(p)), p);
    }

    #[test]
    fn power_system_composes() {
        let m = TorusMap::new(ToralAutomorphism::cat_map());
        let p2 = Power { inner: m, power: 2 };
        let x = TorusPoint::new(0.1, 0.2);
        let once = p2.step(&x).unwrap();
        let twice = m.step(&m.step(&x).unwrap()).unwrap();
        assert_eq!(once, twice);
        let orbit = p2.orbit(&x, 3).unwrap();
        assert_eq!(orbit[0], x);
        assert_eq!(orbit[1], once);
    }
}
