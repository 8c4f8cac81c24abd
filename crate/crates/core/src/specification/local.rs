use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::saddle::SaddleModel;
use crate::blowup::{angle_difference, wrap_angle, CarpetStage, ExtendedPoint};
use crate::sphere::{isometric_radius, local_displacement, FloatSpherePoint};
use crate::toral::TorusPoint;
use crate::Error;

type Mat2 = [[f64; 2]; 2];

/// Linear chart around the hole of a blown saddle point.
///
/// With `P` the period of the orbit and `sigma` the product of its deck signs,
/// the sphere map `G^q` near the orbit point `c` reads `z -> sigma A^q z` in
/// displacement coordinates. `q` is the least multiple of `P` that makes both
/// eigenvalues of `sigma A^q` positive, so in eigen-coordinates `(p, q)` along
/// `(e_s, e_u)` the return map is the saddle `(a p, b q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSaddle {
    orbit: usize,
    power: usize,
    sign: i8,
    centre: TorusPoint,
    radius: f64,
    collar: f64,
    /// Columns `e_s`, `e_u`.
    basis: Mat2,
    dual: Mat2,
    stable_angle: f64,
    box_half: f64,
    model: SaddleModel,
}

impl LocalSaddle {
    /// Chart at point 0 of blown orbit `orbit`. The hole must sit at the orbit
    /// point itself, i.e. no older collar may surround it.
    pub fn new(stage: &CarpetStage, orbit: usize) -> Result<Self, Error> {
        let o = stage
            .blown()
            .get(orbit)
            .ok_or_else(|| crate::invalid("orbit", format!("stage has no blown orbit {orbit}")))?;
        let centre = o.points[0].rep().to_f64();
        if centre.torus_distance(o.lift(0)) > 1e-12 {
            return Err(crate::invalid("orbit", "the hole was moved by an older collar"));
        }
        let period = o.period();
        let sigma: i8 = o.deck_signs.iter().product();
        let e = stage.aut().eigen()?;
        let mut power = period;
        let mut sign = sigma;
        while !(f64::from(sign) * e.lambda_s.powi(power as i32) > 0.0
            && f64::from(sign) * e.lambda_u.powi(power as i32) > 0.0)
        {
            power += period;
            sign *= sigma;
            if power > 4 * period {
                return Err(crate::invalid("orbit", "no power gives a positive saddle"));
            }
        }
        let b = e.lambda_u.abs().powi(power as i32);
        let a = 1.0 / b;
        let basis = [[e.dir_s[0], e.dir_u[0]], [e.dir_s[1], e.dir_u[1]]];
        let det = basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0];
        let dual = [
            [basis[1][1] / det, -basis[0][1] / det],
            [-basis[1][0] / det, basis[0][0] / det],
        ];
        let collar = o.collar();
        let row = |r: [f64; 2]| r[0].hypot(r[1]);
        let box_half = 0.5 * collar * row(dual[0]).max(row(dual[1]));
        // the box corners lie within 2 box_half of c
        if 2.0 * box_half >= isometric_radius(&centre) {
            return Err(Error::RegionInvalid(
                "the eigen-box does not fit in an isometric chart".into(),
            ));
        }
        let model = SaddleModel::new(a, b, box_half)?;
        Ok(Self {
            orbit,
            power,
            sign,
            centre,
            radius: o.radius,
            collar,
            basis,
            dual,
            stable_angle: wrap_angle(e.dir_s[1].atan2(e.dir_s[0])),
            box_half,
            model,
        })
    }

    pub fn orbit(&self) -> usize {
        self.orbit
    }

    /// `q`: the saddle map is `T = H^q`.
    pub fn power(&self) -> usize {
        self.power
    }

    /// Sign `sigma^(q / P)` in `T(c + z) = c + sign A^q z`.
    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn centre(&self) -> &TorusPoint {
        &self.centre
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn collar(&self) -> f64 {
        self.collar
    }

    pub fn stable_angle(&self) -> f64 {
        self.stable_angle
    }

    /// Half-width of the eigen-box `D`, chosen so that the box covers the
    /// collapsed disc of radius `C / 2`.
    pub fn box_half(&self) -> f64 {
        self.box_half
    }

    pub fn model(&self) -> &SaddleModel {
        &self.model
    }

    /// The boundary point at the stable direction, `side` 0 or 1.
    pub fn stable_point(&self, side: usize) -> ExtendedPoint {
        ExtendedPoint::Boundary {
            orbit: self.orbit,
            index: 0,
            angle: wrap_angle(self.stable_angle + PI * side as f64),
        }
    }

    /// Displacement of `s` from the orbit point, when it lies in the
    /// isometric chart.
    pub fn displacement(&self, s: &FloatSpherePoint) -> Option<[f64; 2]> {
        let z = local_displacement(&self.centre, s);
        (z[0].hypot(z[1]) < isometric_radius(&self.centre)).then_some(z)
    }

    pub fn eigen_coords(&self, z: [f64; 2]) -> [f64; 2] {
        apply(&self.dual, z)
    }

    pub fn from_eigen(&self, pq: [f64; 2]) -> [f64; 2] {
        apply(&self.basis, pq)
    }

    /// Collapsed displacement of a stage point; boundary points of the saddle
    /// hole give zero.
    pub fn stage_displacement(&self, stage: &CarpetStage, x: &ExtendedPoint) -> Option<[f64; 2]> {
        if self.on_saddle_circle(x).is_some() {
            return Some([0.0, 0.0]);
        }
        self.displacement(&stage.collapse(x))
    }

    /// Eigen-coordinates of `Pi(x)`, if `Pi(x)` lies in the box `D`.
    pub fn in_box(&self, stage: &CarpetStage, x: &ExtendedPoint) -> Option<[f64; 2]> {
        let pq = self.eigen_coords(self.stage_displacement(stage, x)?);
        self.model.contains(pq[0], pq[1]).then_some(pq)
    }

    /// The point `c + z` lifted into the stage.
    pub fn point_at(&self, stage: &CarpetStage, z: [f64; 2]) -> ExtendedPoint {
        stage.uncollapse(&crate::sphere::project(&self.centre.translate(z)))
    }

    /// The linear return map in displacement coordinates.
    pub fn linear_step(&self, z: [f64; 2]) -> [f64; 2] {
        let pq = self.eigen_coords(z);
        self.from_eigen([self.model.a() * pq[0], self.model.b() * pq[1]])
    }

    fn on_saddle_circle(&self, x: &ExtendedPoint) -> Option<f64> {
        match x {
            ExtendedPoint::Boundary { orbit, index: 0, angle } if *orbit == self.orbit => {
                Some(*angle)
            }
            _ => None,
        }
    }

    /// Angular distance from `theta` to the nearer stable direction.
    pub fn off_axis(&self, theta: f64) -> f64 {
        angle_difference(theta, self.stable_angle)
            .abs()
            .min(angle_difference(theta, self.stable_angle + PI).abs())
    }
}

fn apply(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// Points whose collapsed displacement lies within `half_angle` of the stable
/// axis and within `depth` of the saddle, together with the boundary arcs of
/// the saddle hole in the same directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorRegion {
    pub half_angle: f64,
    pub depth: f64,
}

impl SectorRegion {
    pub fn contains(&self, saddle: &LocalSaddle, stage: &CarpetStage, x: &ExtendedPoint) -> bool {
        if let Some(angle) = saddle.on_saddle_circle(x) {
            return saddle.off_axis(angle) <= self.half_angle;
        }
        let Some(z) = saddle.displacement(&stage.collapse(x)) else {
            return false;
        };
        let r = z[0].hypot(z[1]);
        r > 0.0 && r <= self.depth && saddle.off_axis(z[1].atan2(z[0])) <= self.half_angle
    }
}

/// Open ball of the stage metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallRegion {
    pub centre: ExtendedPoint,
    pub radius: f64,
}

impl BallRegion {
    pub fn contains(&self, stage: &CarpetStage, x: &ExtendedPoint) -> bool {
        stage.distance(&self.centre, x) < self.radius
    }
}

/// The three regions of the saddle experiment: `V` inside `U` near the stable
/// arcs, and a ball `W` away from the saddle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regions {
    pub u: SectorRegion,
    pub v: SectorRegion,
    pub w: BallRegion,
}

impl Regions {
    /// `U`: within 5 degrees of the stable axis and `C/2` of the saddle;
    /// `V`: half of each.
    pub fn standard(saddle: &LocalSaddle, w_centre: ExtendedPoint, w_radius: f64) -> Self {
        Self {
            u: SectorRegion {
                half_angle: PI / 36.0,
                depth: saddle.collar() / 2.0,
            },
            v: SectorRegion {
                half_angle: PI / 72.0,
                depth: saddle.collar() / 4.0,
            },
            w: BallRegion {
                centre: w_centre,
                radius: w_radius,
            },
        }
    }

    /// A lower bound for the stage distance from `V` to the complement of `U`.
    ///
    /// In the collar the stage radius is `R + rho (C - R) / C` for collapsed
    /// radius `rho`, so the radial gap is `(u.depth - v.depth)(C - R) / C`.
    /// Directions differ by at least the angle gap on circles of radius `>= R`.
    pub fn margin(&self, saddle: &LocalSaddle) -> f64 {
        let (r, c) = (saddle.radius(), saddle.collar());
        let radial = (self.u.depth - self.v.depth) * (c - r) / c;
        let angular = 2.0 * r * ((self.u.half_angle - self.v.half_angle) / 2.0).sin();
        radial.min(angular)
    }

    pub fn validate(&self, stage: &CarpetStage, saddle: &LocalSaddle) -> Result<(), Error> {
        let bad = |m: String| Err(Error::RegionInvalid(m));
        if !(self.v.half_angle > 0.0
            && self.v.half_angle < self.u.half_angle
            && self.u.half_angle < PI / 4.0)
        {
            return bad("need 0 < V angle < U angle < pi/4".into());
        }
        if !(self.v.depth > 0.0 && self.v.depth < self.u.depth && self.u.depth <= saddle.collar()) {
            return bad("need 0 < V depth < U depth <= collar".into());
        }
        // the sector edges must stay on the stable side |p| >= |q|
        for side in [-1.0, 1.0] {
            let t = saddle.stable_angle + side * self.u.half_angle;
            let pq = saddle.eigen_coords([t.cos(), t.sin()]);
            if pq[0].abs() < pq[1].abs() {
                return bad("U leaves the stable side of the box".into());
            }
        }
        if !(self.w.radius > 0.0) {
            return bad("W radius must be positive".into());
        }
        let centre = stage.embed(&self.w.centre);
        for (k, o) in stage.blown().iter().enumerate() {
            for i in 0..o.period() {
                let d = local_distance(o.lift(i), &centre);
                if d < o.collar() + self.w.radius {
                    return bad(format!("W meets the collar of hole ({k}, {i})"));
                }
            }
        }
        // W avoids every collar, so Pi is the identity on it
        let d = local_distance(saddle.centre(), &centre);
        if d - self.w.radius <= 2.0 * saddle.box_half() {
            return bad("W meets the box D".into());
        }
        Ok(())
    }
}

fn local_distance(lift: &TorusPoint, s: &FloatSpherePoint) -> f64 {
    let v = local_displacement(lift, s);
    v[0].hypot(v[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::{build_stage, plan_orbits, RadiusSchedule};
    use crate::toral::ToralAutomorphism;

    fn stage(depth: usize) -> CarpetStage {
        let plan = plan_orbits(&ToralAutomorphism::cat_map(), 6).unwrap();
        build_stage(&plan, depth, &RadiusSchedule::default()).unwrap()
    }

    #[test]
    fn first_orbit_chart() {
        let st = stage(1);
        let s = LocalSaddle::new(&st, 0).unwrap();
        assert_eq!(s.power(), 2);
        let lu = ToralAutomorphism::cat_map().eigen().unwrap().lambda_u;
        assert!((s.model().b() - lu * lu).abs() < 1e-12);
        // the linear step agrees with the stage map on collapsed points
        let z = [0.3 * s.collar(), -0.1 * s.collar()];
        let x = s.point_at(&st, z);
        let mut y = x.clone();
        for _ in 0..s.power() {
            y = st.apply(&y).unwrap();
        }
        let got = s.stage_displacement(&st, &y).unwrap();
        let want = s.linear_step(z);
        assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
    }

    #[test]
    fn stable_angle_is_fixed_on_the_circle() {
        let st = stage(1);
        let s = LocalSaddle::new(&st, 0).unwrap();
        for side in 0..2 {
            let mut p = s.stable_point(side);
            for _ in 0..s.power() {
                p = st.apply(&p).unwrap();
            }
            match (p, s.stable_point(side)) {
                (
                    ExtendedPoint::Boundary { angle: a, index: 0, .. },
                    ExtendedPoint::Boundary { angle: b, .. },
                ) => assert!(angle_difference(a, b).abs() < 1e-12),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn sectors_contain_their_arcs() {
        let st = stage(1);
        let s = LocalSaddle::new(&st, 0).unwrap();
        let regions = Regions::standard(&s, ExtendedPoint::regular(TorusPoint::new(0.4, 0.8)), 0.01);
        assert!(regions.u.contains(&s, &st, &s.stable_point(0)));
        assert!(regions.v.contains(&s, &st, &s.stable_point(1)));
        let t = s.stable_angle() + PI / 2.0;
        let across = ExtendedPoint::Boundary { orbit: 0, index: 0, angle: t };
        assert!(!regions.u.contains(&s, &st, &across));
        let along = s.point_at(&st, s.from_eigen([0.2 * s.collar(), 0.0]));
        assert!(regions.v.contains(&s, &st, &along));
        let edge = s.point_at(&st, s.from_eigen([0.2 * s.collar(), 0.2 * s.collar()]));
        assert!(!regions.u.contains(&s, &st, &edge));
        regions.validate(&st, &s).unwrap();
        assert!(regions.margin(&s) > 0.0);
        let near = Regions::standard(&s, s.point_at(&st, [s.collar() * 1.05, 0.0]), 0.01);
        assert!(matches!(near.validate(&st, &s), Err(Error::RegionInvalid(_))));
    }
}
