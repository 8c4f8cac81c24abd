use rand::Rng;
use serde::{Deserialize, Serialize};

use super::local::{LocalSaddle, Regions};
use super::saddle::saddle_exit_time;
use crate::blowup::{CarpetStage, ExtendedPoint};
use crate::rng::stream_rng;
use crate::sphere::project;
use crate::toral::TorusPoint;
use crate::Error;

/// Slack on the one-half bound for excursions cut at region boundaries.
pub const VISIT_TOLERANCE: f64 = 0.05;

/// The stretch of orbit between two consecutive returns to `W`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    /// Return times `k_i < k_(i+1)`.
    pub start: usize,
    pub end: usize,
    /// Visits to `U` at times `k_i + 1 ..= k_(i+1)`.
    pub u_visits: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitReport {
    /// Orbit length and the power `q` of `T = H^q` that generated it.
    pub steps: usize,
    pub power: usize,
    pub u_visits: usize,
    /// Fraction of all times in `U`.
    pub u_fraction: f64,
    /// Return times `k_i` to `W`.
    pub returns: Vec<usize>,
    /// Excursions whose end points lie outside the box `D`.
    pub excursions: Vec<Excursion>,
    pub max_fraction: f64,
    /// `|{j < k_i : T^j x in U}| / k_i` at the last return.
    pub long_run_fraction: Option<f64>,
    /// Passages through `D` that were checked against the saddle exit time.
    pub passages: usize,
    /// Passages with more than `m + 1` visits to `U` after entering the
    /// stable side, or shorter than `2m + 1` steps.
    pub passage_violations: usize,
    pub tolerance: f64,
    pub bound_holds: bool,
}

/// Visit statistics of an orbit of `T`, given as its consecutive points.
pub fn excursion_report(
    stage: &CarpetStage,
    saddle: &LocalSaddle,
    regions: &Regions,
    orbit: &[ExtendedPoint],
) -> Result<VisitReport, Error> {
    if orbit.is_empty() {
        return Err(Error::EmptyOrbit);
    }
    let in_u: Vec<bool> = orbit.iter().map(|x| regions.u.contains(saddle, stage, x)).collect();
    let in_w: Vec<bool> = orbit.iter().map(|x| regions.w.contains(stage, x)).collect();
    let boxed: Vec<Option<[f64; 2]>> = orbit.iter().map(|x| saddle.in_box(stage, x)).collect();

    let returns: Vec<usize> = (0..orbit.len()).filter(|&j| in_w[j]).collect();
    let mut prefix = vec![0usize; orbit.len() + 1];
    for j in 0..orbit.len() {
        prefix[j + 1] = prefix[j] + in_u[j] as usize;
    }
    let excursions: Vec<Excursion> = returns
        .windows(2)
        .filter(|k| boxed[k[0]].is_none() && boxed[k[1]].is_none())
        .map(|k| {
            let u_visits = prefix[k[1] + 1] - prefix[k[0] + 1];
            Excursion {
                start: k[0],
                end: k[1],
                u_visits,
                fraction: u_visits as f64 / (k[1] - k[0]) as f64,
            }
        })
        .collect();
    let max_fraction = excursions.iter().map(|e| e.fraction).fold(0.0, f64::max);
    let long_run_fraction = returns
        .last()
        .filter(|&&k| k > 0)
        .map(|&k| prefix[k] as f64 / k as f64);

    let (passages, passage_violations) = check_passages(saddle, &boxed, &in_u);
    let u_visits = prefix[orbit.len()];
    Ok(VisitReport {
        steps: orbit.len(),
        power: saddle.power(),
        u_visits,
        u_fraction: u_visits as f64 / orbit.len() as f64,
        returns,
        max_fraction,
        excursions,
        long_run_fraction,
        passages,
        passage_violations,
        tolerance: VISIT_TOLERANCE,
        bound_holds: max_fraction <= 0.5 + VISIT_TOLERANCE,
    })
}

/// Compare each complete passage through `D` with the saddle exit time of its
/// first point on the stable side.
fn check_passages(saddle: &LocalSaddle, boxed: &[Option<[f64; 2]>], in_u: &[bool]) -> (usize, usize) {
    let (mut checked, mut bad) = (0, 0);
    let mut j = 0;
    while j < boxed.len() {
        if boxed[j].is_none() {
            j += 1;
            continue;
        }
        let start = j;
        while j < boxed.len() && boxed[j].is_some() {
            j += 1;
        }
        // passages cut by the ends of the orbit are incomplete
        if start == 0 || j == boxed.len() {
            continue;
        }
        let entry = (start..j).find(|&i| {
            let [p, q] = boxed[i].expect("inside the passage");
            q != 0.0 && p.abs() >= q.abs()
        });
        let Some(e) = entry else { continue };
        let [p, q] = boxed[e].expect("inside the passage");
        let Ok(exit) = saddle_exit_time(saddle.model(), p, q) else {
            continue;
        };
        checked += 1;
        let u = in_u[e..j].iter().filter(|&&b| b).count();
        let m = exit.m as usize;
        if u > m + 1 || (exit.bound_ok && j - e < 2 * m + 1) {
            bad += 1;
        }
    }
    (checked, bad)
}

/// `T = H^q` applied once.
pub fn saddle_step(stage: &CarpetStage, saddle: &LocalSaddle, x: &ExtendedPoint) -> Result<ExtendedPoint, Error> {
    Ok(stage.iterate(x, saddle.power())?)
}

fn saddle_step_back(
    stage: &CarpetStage,
    saddle: &LocalSaddle,
    x: &ExtendedPoint,
) -> Result<ExtendedPoint, Error> {
    let mut cur = x.clone();
    for _ in 0..saddle.power() {
        cur = stage.apply_inverse(&cur)?;
    }
    Ok(cur)
}

/// `n` points of the `T`-orbit of `start`.
pub fn visit_fraction(
    stage: &CarpetStage,
    saddle: &LocalSaddle,
    start: &ExtendedPoint,
    n: usize,
    regions: &Regions,
) -> Result<VisitReport, Error> {
    regions.validate(stage, saddle)?;
    if n == 0 {
        return Err(Error::EmptyOrbit);
    }
    let mut orbit = Vec::with_capacity(n);
    orbit.push(stage.normalize(start)?);
    while orbit.len() < n {
        let next = saddle_step(stage, saddle, orbit.last().expect("non-empty"))?;
        orbit.push(next);
    }
    excursion_report(stage, saddle, regions, &orbit)
}

/// How a seeded orbit is started.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitStart {
    /// Forward orbit of a uniform point.
    Uniform,
    /// Two-sided orbit through a point just off a stable arc of the saddle,
    /// so that it passes close to the saddle in the middle.
    NearStableArc,
}

/// `n` consecutive points of a `T`-orbit chosen by `seed`.
pub fn seeded_orbit(
    stage: &CarpetStage,
    saddle: &LocalSaddle,
    start: OrbitStart,
    seed: u64,
    n: usize,
) -> Result<Vec<ExtendedPoint>, Error> {
    if n == 0 {
        return Err(Error::EmptyOrbit);
    }
    let mut rng = stream_rng(seed, 0);
    let (centre, back) = match start {
        OrbitStart::Uniform => {
            let p = TorusPoint::new(rng.random(), rng.random());
            (stage.uncollapse(&project(&p)), 0)
        }
        OrbitStart::NearStableArc => {
            let side = if rng.random::<bool>() { 0.0 } else { std::f64::consts::PI };
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let offset = sign * 10f64.powf(-rng.random_range(2.0..8.0));
            let r = rng.random_range(0.2..0.95) * saddle.collar() / 2.0;
            let t = saddle.stable_angle() + side + offset;
            (saddle.point_at(stage, [r * t.cos(), r * t.sin()]), n / 2)
        }
    };
    let mut past = Vec::with_capacity(back);
    let mut cur = centre.clone();
    for _ in 0..back {
        cur = saddle_step_back(stage, saddle, &cur)?;
        past.push(cur.clone());
    }
    past.reverse();
    past.push(centre);
    while past.len() < n {
        let next = saddle_step(stage, saddle, past.last().expect("non-empty"))?;
        past.push(next);
    }
    Ok(past)
}
