use serde::{Deserialize, Serialize};

use super::direction::wrap_angle;
use super::plan::{sphere_orbit, OrbitPlan};
use super::BlowupError;
use crate::sphere::{
    distance_to_branch_set, factor_apply, factor_apply_inverse, local_displacement, project,
    sphere_metric, ExactSpherePoint, FloatSpherePoint, SphereChart,
};
use crate::toral::{min_image, IntMatrix2, RationalTorusPoint, ToralAutomorphism, TorusPoint};

pub const STAGE_FORMAT: &str = "carpet-stage";
pub const STAGE_VERSION: u32 = 1;

/// Radii `r_k = min(r0 2^-k, s_k / (3 kappa), r_{k-1})` for the `k`-th blown
/// orbit (`k >= 1`), where `s_k` is the room left around the orbit by the
/// branch set, its own points, and the collars already placed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusSchedule {
    #[serde(default = "default_r0")]
    pub r0: f64,
    /// Collar radius as a multiple of the hole radius; must exceed 1.
    #[serde(default = "default_collar")]
    pub collar_factor: f64,
}

fn default_r0() -> f64 {
    0.1
}

fn default_collar() -> f64 {
    2.0
}

impl Default for RadiusSchedule {
    fn default() -> Self {
        Self {
            r0: default_r0(),
            collar_factor: default_collar(),
        }
    }
}

impl RadiusSchedule {
    pub fn validate(&self) -> Result<(), BlowupError> {
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            return Err(BlowupError::InvalidSchedule(format!("r0 must be positive, got {}", self.r0)));
        }
        if !(self.collar_factor.is_finite() && self.collar_factor > 1.0) {
            return Err(BlowupError::InvalidSchedule(format!(
                "collar_factor must exceed 1, got {}",
                self.collar_factor
            )));
        }
        Ok(())
    }

    /// `r0 2^-k`.
    pub fn envelope(&self, k: usize) -> f64 {
        self.r0 * 0.5f64.powi(k as i32)
    }
}

/// A point of a stage: either a regular sphere point outside every open hole,
/// or a direction `angle` on the boundary circle that replaced point `index`
/// of blown orbit `orbit` (numbered in blow-up order from 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtendedPoint {
    Regular(FloatSpherePoint),
    Boundary { orbit: usize, index: usize, angle: f64 },
}

impl ExtendedPoint {
    pub fn regular(p: TorusPoint) -> Self {
        Self::Regular(project(&p))
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, Self::Boundary { .. })
    }
}

type Mat2 = [[f64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat_inv(a: &Mat2) -> Mat2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

fn mat_scale(a: &Mat2, k: f64) -> Mat2 {
    [[a[0][0] * k, a[0][1] * k], [a[1][0] * k, a[1][1] * k]]
}

const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

/// Direction of `m u_theta`.
fn act_on_angle(m: &Mat2, theta: f64) -> f64 {
    let (c, s) = (theta.cos(), theta.sin());
    let x = m[0][0] * c + m[0][1] * s;
    let y = m[1][0] * c + m[1][1] * s;
    wrap_angle(y.atan2(x))
}

/// Radial profile of the collar squeeze: `R <= r <= C` onto `0 <= r <= C`.
fn squeeze_radius(r: f64, big_r: f64, collar: f64) -> f64 {
    collar * (r.max(big_r) - big_r) / (collar - big_r)
}

fn unsqueeze_radius(rho: f64, big_r: f64, collar: f64) -> f64 {
    big_r + rho * (collar - big_r) / collar
}

/// Jacobian of `v -> v psi(|v|) / |v|` at `v` inside the annulus.
fn squeeze_jacobian(v: [f64; 2], big_r: f64, collar: f64) -> Mat2 {
    let r2 = v[0] * v[0] + v[1] * v[1];
    let r = r2.sqrt();
    let g = squeeze_radius(r, big_r, collar) / r;
    let dpsi = collar / (collar - big_r);
    let k = (dpsi - g) / r2;
    [
        [g + k * v[0] * v[0], k * v[0] * v[1]],
        [k * v[1] * v[0], g + k * v[1] * v[1]],
    ]
}

/// One blown orbit. Its holes sit at the positions that the orbit points
/// occupy in the previous stage, which differ from the orbit points only when
/// an older collar surrounds them.
#[derive(Clone, Debug, PartialEq)]
pub struct BlownOrbit {
    /// Position of the orbit in the plan it was taken from.
    pub plan_id: usize,
    /// The orbit on the sphere, `points[i+1] = G(points[i])`.
    pub points: Vec<ExactSpherePoint>,
    /// `A lift_i = sign_i lift_{i+1} mod 1` for the canonical lifts.
    pub deck_signs: Vec<i8>,
    pub radius: f64,
    /// One chart per hole: centre at the hole, radius equal to the collar.
    pub charts: Vec<SphereChart>,
    /// Linear maps taking chart `i` directions to chart `i + 1` directions.
    pub boundary_maps: Vec<[[f64; 2]; 2]>,
}

impl BlownOrbit {
    pub fn period(&self) -> usize {
        self.points.len()
    }

    pub fn collar(&self) -> f64 {
        self.charts[0].radius
    }

    pub fn lift(&self, i: usize) -> &TorusPoint {
        &self.charts[i].lift
    }
}

/// Where a sphere point sits relative to the collars of one orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollarHit {
    pub orbit: usize,
    pub index: usize,
    /// Displacement from the hole centre in its chart.
    pub offset: [f64; 2],
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CarpetStage {
    aut: ToralAutomorphism,
    schedule: RadiusSchedule,
    max_period: i64,
    blown: Vec<BlownOrbit>,
}

fn deck_sign(
    aut: &ToralAutomorphism,
    from: &ExactSpherePoint,
    to: &ExactSpherePoint,
) -> Result<i8, BlowupError> {
    let image = aut.apply(from.rep());
    if image == *to.rep() {
        Ok(1)
    } else if image == to.rep().neg() {
        Ok(-1)
    } else {
        Err(BlowupError::Format(format!(
            "{} does not map to {}",
            from.rep(),
            to.rep()
        )))
    }
}

/// Blow up the first `depth` selected orbits of `plan`.
pub fn build_stage(
    plan: &OrbitPlan,
    depth: usize,
    schedule: &RadiusSchedule,
) -> Result<CarpetStage, BlowupError> {
    schedule.validate()?;
    let chosen: Vec<_> = plan.selected().take(depth).collect();
    if chosen.len() < depth {
        return Err(BlowupError::NotEnoughOrbits {
            requested: depth,
            available: chosen.len(),
            max_period: plan.max_period,
        });
    }
    let mut stage = CarpetStage {
        aut: plan.aut,
        schedule: schedule.clone(),
        max_period: plan.max_period,
        blown: Vec::with_capacity(depth),
    };
    let mut prev = f64::INFINITY;
    for (k0, orbit) in chosen.into_iter().enumerate() {
        let r = stage.push_orbit(orbit.id, orbit.points.clone(), |room| {
            schedule.envelope(k0 + 1).min(room / (3.0 * schedule.collar_factor)).min(prev)
        })?;
        prev = r;
    }
    let grid = 128;
    if !super::invariants::complement_connected(&stage, grid) {
        return Err(BlowupError::Disconnected(grid));
    }
    Ok(stage)
}

/// Tolerance (relative to the hole radius) within which a regular point is
/// read as lying on the boundary circle.
const BOUNDARY_TOL: f64 = 1e-9;

impl CarpetStage {
    /// The sphere itself, with no holes.
    pub fn base(aut: ToralAutomorphism) -> Self {
        Self {
            aut,
            schedule: RadiusSchedule::default(),
            max_period: 0,
            blown: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.blown.len()
    }

    pub fn aut(&self) -> &ToralAutomorphism {
        &self.aut
    }

    pub fn schedule(&self) -> &RadiusSchedule {
        &self.schedule
    }

    pub fn max_period(&self) -> i64 {
        self.max_period
    }

    pub fn blown(&self) -> &[BlownOrbit] {
        &self.blown
    }

    /// The stage made of the first `depth` blown orbits.
    pub fn truncate(&self, depth: usize) -> Self {
        Self {
            blown: self.blown[..depth.min(self.depth())].to_vec(),
            ..self.clone()
        }
    }

    /// Blow up one more orbit. `radius` turns the available room into the
    /// hole radius; the room is the distance from the new hole centres to the
    /// branch set, to each other, to older holes and to older collar edges.
    fn push_orbit(
        &mut self,
        plan_id: usize,
        points: Vec<ExactSpherePoint>,
        radius: impl FnOnce(f64) -> f64,
    ) -> Result<f64, BlowupError> {
        let k = self.depth();
        let infeasible = |slack: f64| BlowupError::ScheduleInfeasible {
            orbit: plan_id,
            slack,
        };
        let mut centers = Vec::with_capacity(points.len());
        for c in &points {
            match self.uncollapse(&c.to_float()) {
                ExtendedPoint::Regular(x) => centers.push(x),
                ExtendedPoint::Boundary { .. } => return Err(infeasible(0.0)),
            }
        }
        let mut room = f64::INFINITY;
        for (a, x) in centers.iter().enumerate() {
            room = room.min(distance_to_branch_set(x.rep()));
            for y in &centers[a + 1..] {
                room = room.min(sphere_metric(x, y));
            }
            for old in &self.blown {
                for ch in &old.charts {
                    let d = sphere_metric(x, &ch.center);
                    room = room.min(d - old.radius).min((d - ch.radius).abs());
                }
            }
        }
        if !(room > 0.0) {
            return Err(infeasible(room));
        }
        let r = radius(room);
        if !(r > 0.0) {
            return Err(infeasible(r));
        }
        let collar = self.schedule.collar_factor * r;
        let p = points.len();
        let deck_signs = (0..p)
            .map(|i| deck_sign(&self.aut, &points[i], &points[(i + 1) % p]))
            .collect::<Result<Vec<_>, _>>()?;
        let charts: Vec<SphereChart> = centers
            .iter()
            .map(|x| SphereChart {
                center: x.clone(),
                radius: collar,
                lift: *x.rep(),
            })
            .collect();
        // chart-to-chart linearization of Pi_{k}^-1 o G o Pi_{k} at each hole
        let lins = charts
            .iter()
            .zip(&points)
            .map(|(ch, c)| self.linearize(&ch.lift, c))
            .collect::<Result<Vec<_>, _>>()?;
        let a = {
            let m = self.aut.matrix();
            [[m.a as f64, m.b as f64], [m.c as f64, m.d as f64]]
        };
        let boundary_maps = (0..p)
            .map(|i| {
                let (ji, jn) = (&lins[i], &lins[(i + 1) % p]);
                let sign = f64::from(deck_signs[i]);
                mat_scale(&mat_mul(&mat_inv(jn), &mat_mul(&a, ji)), sign)
            })
            .collect();
        debug_assert_eq!(k, self.blown.len());
        self.blown.push(BlownOrbit {
            plan_id,
            points,
            deck_signs,
            radius: r,
            charts,
            boundary_maps,
        });
        Ok(r)
    }

    /// Derivative of the collapse map at the torus point `lift`, expressed
    /// from the chart at `lift` to the canonical chart of `target`, where
    /// `target` is the collapsed image of `lift`.
    fn linearize(&self, lift: &TorusPoint, target: &ExactSpherePoint) -> Result<Mat2, BlowupError> {
        let mut p = *lift;
        let mut jac = IDENTITY;
        for orbit in self.blown.iter().rev() {
            let collar = orbit.collar();
            for ch in &orbit.charts {
                let base = [ch.lift, ch.lift.neg()]
                    .into_iter()
                    .map(|b| (b, b.displacement_to(&p)))
                    .find(|(_, v)| v[0].hypot(v[1]) < collar);
                if let Some((b, v)) = base {
                    let r = v[0].hypot(v[1]);
                    let scale = squeeze_radius(r, orbit.radius, collar) / r;
                    jac = mat_mul(&squeeze_jacobian(v, orbit.radius, collar), &jac);
                    p = b.translate([v[0] * scale, v[1] * scale]);
                    break;
                }
            }
        }
        let t = target.rep().to_f64();
        let (dp, dm) = (p.torus_distance(&t), p.torus_distance(&t.neg()));
        if dp.min(dm) > 1e-9 {
            return Err(BlowupError::InvalidPoint(format!(
                "collapse of {lift:?} misses {}",
                target.rep()
            )));
        }
        Ok(if dp <= dm { jac } else { mat_scale(&jac, -1.0) })
    }

    /// The collar of orbit `k` containing `s`, if any.
    fn hit_in(&self, k: usize, s: &FloatSpherePoint) -> Option<CollarHit> {
        let orbit = &self.blown[k];
        let collar = orbit.collar();
        let sx = s.rep().x;
        for (i, chart) in orbit.charts.iter().enumerate() {
            // cheap reject on the x coordinate of both lifts
            let cx = chart.lift.x;
            if min_image(cx - sx).abs() >= collar && min_image(cx + sx).abs() >= collar {
                continue;
            }
            let v = local_displacement(&chart.lift, s);
            let d = v[0].hypot(v[1]);
            if d < collar {
                return Some(CollarHit {
                    orbit: k,
                    index: i,
                    offset: v,
                    distance: d,
                });
            }
        }
        None
    }

    /// Every collar containing `s`, oldest first. Collars of one orbit are
    /// disjoint, and a newer collar lies inside an older annulus or outside
    /// the older collar altogether.
    pub fn collar_hits(&self, s: &FloatSpherePoint) -> Vec<CollarHit> {
        (0..self.depth()).filter_map(|k| self.hit_in(k, s)).collect()
    }

    fn check_boundary(&self, orbit: usize, index: usize, angle: f64) -> Result<(), BlowupError> {
        let ok = self
            .blown
            .get(orbit)
            .is_some_and(|o| index < o.period())
            && angle.is_finite();
        if ok {
            Ok(())
        } else {
            Err(BlowupError::InvalidPoint(format!(
                "boundary point ({orbit}, {index}, {angle}) does not exist at depth {}",
                self.depth()
            )))
        }
    }

    /// Check `p` against the stage, reading regular points on a hole boundary
    /// as boundary points.
    pub fn normalize(&self, p: &ExtendedPoint) -> Result<ExtendedPoint, BlowupError> {
        match p {
            ExtendedPoint::Boundary { orbit, index, angle } => {
                self.check_boundary(*orbit, *index, *angle)?;
                Ok(ExtendedPoint::Boundary {
                    orbit: *orbit,
                    index: *index,
                    angle: wrap_angle(*angle),
                })
            }
            ExtendedPoint::Regular(s) => {
                if !(s.rep().x.is_finite() && s.rep().y.is_finite()) {
                    return Err(BlowupError::InvalidPoint("non-finite coordinates".into()));
                }
                for h in self.collar_hits(s) {
                    let r = self.blown[h.orbit].radius;
                    if h.distance < r * (1.0 - BOUNDARY_TOL) {
                        return Err(BlowupError::InvalidPoint(format!(
                            "{:?} lies inside hole ({}, {})",
                            s.rep(),
                            h.orbit,
                            h.index
                        )));
                    }
                    if h.distance <= r {
                        return Ok(ExtendedPoint::Boundary {
                            orbit: h.orbit,
                            index: h.index,
                            angle: wrap_angle(h.offset[1].atan2(h.offset[0])),
                        });
                    }
                }
                Ok(p.clone())
            }
        }
    }

    fn squeeze(&self, h: &CollarHit) -> FloatSpherePoint {
        let orbit = &self.blown[h.orbit];
        let rho = squeeze_radius(h.distance, orbit.radius, orbit.collar());
        let scale = rho / h.distance;
        project(
            &orbit
                .lift(h.index)
                .translate([h.offset[0] * scale, h.offset[1] * scale]),
        )
    }

    fn unsqueeze(&self, h: &CollarHit) -> FloatSpherePoint {
        let orbit = &self.blown[h.orbit];
        let r = unsqueeze_radius(h.distance, orbit.radius, orbit.collar());
        let scale = r / h.distance;
        project(
            &orbit
                .lift(h.index)
                .translate([h.offset[0] * scale, h.offset[1] * scale]),
        )
    }

    /// The collapse map `Pi_n` onto the sphere: squeeze the collars from the
    /// newest orbit down to the oldest.
    pub fn collapse(&self, p: &ExtendedPoint) -> FloatSpherePoint {
        let (mut s, below) = match p {
            ExtendedPoint::Boundary { orbit, index, .. } => {
                (self.blown[*orbit].charts[*index].center.clone(), *orbit)
            }
            ExtendedPoint::Regular(s) => (s.clone(), self.depth()),
        };
        for k in (0..below).rev() {
            if let Some(h) = self.hit_in(k, &s) {
                s = self.squeeze(&h);
            }
        }
        s
    }

    /// Inverse of the collapse map. A point that lands on a hole centre has no
    /// preferred direction and goes to angle 0 of that circle.
    pub fn uncollapse(&self, s: &FloatSpherePoint) -> ExtendedPoint {
        let mut s = s.clone();
        for k in 0..self.depth() {
            if let Some(h) = self.hit_in(k, &s) {
                if h.distance == 0.0 {
                    return ExtendedPoint::Boundary {
                        orbit: h.orbit,
                        index: h.index,
                        angle: 0.0,
                    };
                }
                s = self.unsqueeze(&h);
            }
        }
        ExtendedPoint::Regular(s)
    }

    /// The stage homeomorphism `H_n`.
    pub fn apply(&self, p: &ExtendedPoint) -> Result<ExtendedPoint, BlowupError> {
        match self.normalize(p)? {
            ExtendedPoint::Boundary { orbit, index, angle } => {
                let o = &self.blown[orbit];
                Ok(ExtendedPoint::Boundary {
                    orbit,
                    index: (index + 1) % o.period(),
                    angle: act_on_angle(&o.boundary_maps[index], angle),
                })
            }
            q @ ExtendedPoint::Regular(_) => {
                Ok(self.uncollapse(&factor_apply(&self.aut, &self.collapse(&q))))
            }
        }
    }

    /// `H_n^-1`, built from the inverse automorphism.
    pub fn apply_inverse(&self, p: &ExtendedPoint) -> Result<ExtendedPoint, BlowupError> {
        match self.normalize(p)? {
            ExtendedPoint::Boundary { orbit, index, angle } => {
                let o = &self.blown[orbit];
                let prev = (index + o.period() - 1) % o.period();
                Ok(ExtendedPoint::Boundary {
                    orbit,
                    index: prev,
                    angle: act_on_angle(&mat_inv(&o.boundary_maps[prev]), angle),
                })
            }
            q @ ExtendedPoint::Regular(_) => Ok(self.uncollapse(&factor_apply_inverse(
                &self.aut,
                &self.collapse(&q),
            ))),
        }
    }

    /// `H_n^k` for `k >= 0`.
    pub fn iterate(&self, p: &ExtendedPoint, k: usize) -> Result<ExtendedPoint, BlowupError> {
        let mut cur = self.normalize(p)?;
        for _ in 0..k {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// The projection `pi_n: S_n -> S_{n-1}` collapsing the newest circles.
    pub fn project_down(&self, p: &ExtendedPoint) -> Result<ExtendedPoint, BlowupError> {
        let newest = self
            .depth()
            .checked_sub(1)
            .ok_or_else(|| BlowupError::InvalidPoint("depth-0 stage has no projection".into()))?;
        match self.normalize(p)? {
            ExtendedPoint::Boundary { orbit, index, .. } if orbit == newest => Ok(
                ExtendedPoint::Regular(self.blown[orbit].charts[index].center.clone()),
            ),
            ExtendedPoint::Regular(s) => match self.hit_in(newest, &s) {
                Some(h) => Ok(ExtendedPoint::Regular(self.squeeze(&h))),
                None => Ok(ExtendedPoint::Regular(s)),
            },
            q => Ok(q),
        }
    }

    /// Location of `p` in the pillowcase, with boundary circles drawn at the
    /// hole radius.
    pub fn embed(&self, p: &ExtendedPoint) -> FloatSpherePoint {
        match p {
            ExtendedPoint::Regular(s) => s.clone(),
            ExtendedPoint::Boundary { orbit, index, angle } => {
                let o = &self.blown[*orbit];
                project(&o.lift(*index).translate([o.radius * angle.cos(), o.radius * angle.sin()]))
            }
        }
    }

    /// Metric on the stage induced by the embedding.
    pub fn distance(&self, p: &ExtendedPoint, q: &ExtendedPoint) -> f64 {
        sphere_metric(&self.embed(p), &self.embed(q))
    }

    /// Whether a sphere point lies in the open hole of some blown point.
    pub fn in_hole(&self, s: &FloatSpherePoint) -> bool {
        self.collar_hits(s)
            .iter()
            .any(|h| h.distance < self.blown[h.orbit].radius)
    }

    pub fn to_document(&self) -> StageDocument {
        StageDocument {
            format: STAGE_FORMAT.to_string(),
            version: STAGE_VERSION,
            matrix: *self.aut.matrix(),
            max_period: self.max_period,
            schedule: self.schedule.clone(),
            depth: self.depth(),
            orbits: self
                .blown
                .iter()
                .map(|o| OrbitRecord {
                    plan_id: o.plan_id,
                    period: o.period(),
                    points: o.points.iter().map(|s| s.rep().clone()).collect(),
                    deck_signs: o.deck_signs.clone(),
                    radius: o.radius,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("stage documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, BlowupError> {
        let doc: StageDocument =
            serde_json::from_str(text).map_err(|e| BlowupError::Format(e.to_string()))?;
        Self::from_document(&doc)
    }

    /// Rebuild a stage, re-checking every recorded orbit and radius.
    pub fn from_document(doc: &StageDocument) -> Result<Self, BlowupError> {
        let bad = |m: String| Err(BlowupError::Format(m));
        if doc.format != STAGE_FORMAT {
            return bad(format!("format is {:?}, expected {STAGE_FORMAT:?}", doc.format));
        }
        if doc.version != STAGE_VERSION {
            return bad(format!("unsupported version {}", doc.version));
        }
        if doc.depth != doc.orbits.len() {
            return bad(format!("depth {} but {} orbits", doc.depth, doc.orbits.len()));
        }
        doc.schedule.validate()?;
        let aut = ToralAutomorphism::new(doc.matrix)?;
        let mut stage = Self {
            aut,
            schedule: doc.schedule.clone(),
            max_period: doc.max_period,
            blown: Vec::with_capacity(doc.orbits.len()),
        };
        for (k, rec) in doc.orbits.iter().enumerate() {
            let Some(first) = rec.points.first() else {
                return bad(format!("orbit {k} is empty"));
            };
            let points = sphere_orbit(&aut, &project(first));
            let given: Vec<_> = rec.points.iter().map(project).collect();
            if points != given || rec.period != points.len() {
                return bad(format!("orbit {k} is not a periodic orbit listed in order"));
            }
            if points.iter().any(|s| s.is_branch()) {
                return bad(format!("orbit {k} meets the branch set"));
            }
            let radius = rec.radius;
            let kappa = doc.schedule.collar_factor;
            let mut fits = true;
            stage.push_orbit(rec.plan_id, points, |room| {
                fits = radius.is_finite() && radius > 0.0 && kappa * radius < room;
                radius
            })?;
            if !fits {
                return bad(format!("orbit {k} radius {radius} does not fit"));
            }
            if stage.blown[k].deck_signs != rec.deck_signs {
                return bad(format!("orbit {k} has inconsistent deck signs"));
            }
        }
        Ok(stage)
    }
}

/// Serialized form of a stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageDocument {
    pub format: String,
    pub version: u32,
    pub matrix: IntMatrix2,
    pub max_period: i64,
    pub schedule: RadiusSchedule,
    pub depth: usize,
    pub orbits: Vec<OrbitRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitRecord {
    pub plan_id: usize,
    pub period: usize,
    pub points: Vec<RationalTorusPoint>,
    pub deck_signs: Vec<i8>,
    pub radius: f64,
}

pub fn apply_stage(stage: &CarpetStage, p: &ExtendedPoint) -> Result<ExtendedPoint, BlowupError> {
    stage.apply(p)
}

pub fn project_stage(stage: &CarpetStage, p: &ExtendedPoint) -> Result<ExtendedPoint, BlowupError> {
    stage.project_down(p)
}

/// Compare stage points: same circle and angle, or regular points within `tol`.
pub fn same_point(a: &ExtendedPoint, b: &ExtendedPoint, tol: f64) -> bool {
    match (a, b) {
        (ExtendedPoint::Regular(s), ExtendedPoint::Regular(t)) => sphere_metric(s, t) <= tol,
        (
            ExtendedPoint::Boundary { orbit: o1, index: i1, angle: t1 },
            ExtendedPoint::Boundary { orbit: o2, index: i2, angle: t2 },
        ) => o1 == o2 && i1 == i2 && super::angle_difference(*t1, *t2).abs() <= tol,
        _ => false,
    }
}
