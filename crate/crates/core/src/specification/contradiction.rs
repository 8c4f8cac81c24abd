use num_integer::Integer;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::local::{LocalSaddle, Regions};
use super::visit::{excursion_report, saddle_step};
use crate::blowup::{plan_orbits, CarpetStage, ExtendedPoint};
use crate::measure::{empirical_measure, lp_distance, DiscreteMeasure};
use crate::rng::stream_rng;
use crate::space::StageSpace;
use crate::sphere::{local_displacement, project};
use crate::Error;

/// Longest period accepted for the point `u`.
const MAX_U_PERIOD: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContradictionParams {
    /// Weight moved from the saddle onto the orbit of `u`.
    pub alpha: f64,
    pub delta: f64,
    /// Number of seeded orbits started in `W`.
    pub seeds: usize,
    /// Length of each seeded orbit, in steps of `T`.
    pub orbit_len: usize,
    /// Periodic orbit measures up to this period of `G` are also tried.
    pub max_period: i64,
    pub seed: u64,
}

impl Default for ContradictionParams {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            delta: 5e-4,
            seeds: 1000,
            orbit_len: 2000,
            max_period: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateSource {
    /// Orbit of `T` from a random point of `W`, up to its last return to `W`.
    Seeded { seed: u64 },
    /// One `T`-orbit inside a periodic orbit of `G` of period `period`.
    Periodic { period: usize, plan_id: usize, offset: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub source: CandidateSource,
    pub points: usize,
    /// Whether the segment starts and ends in `W` (always true for periodic
    /// orbits that meet `W`).
    pub closed: bool,
    pub rho: f64,
    pub nu_u: f64,
    pub nu_w: f64,
    /// Largest U-fraction over the excursions between returns to `W`.
    pub max_excursion_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContradictionReport {
    pub params: ContradictionParams,
    pub power: usize,
    pub u_period: usize,
    pub regions: Regions,
    pub mu_hat: DiscreteMeasure<ExtendedPoint>,
    /// `mu_hat(V)`, at least `1 - alpha`.
    pub mu_hat_v: f64,
    /// `mu_hat(V) - delta`: the lower bound on `nu(U)` for any `nu` within
    /// `delta` of `mu_hat`.
    pub chain_bound: f64,
    pub candidates: Vec<Candidate>,
    pub min_rho: f64,
    pub within_delta: usize,
    /// Candidates within `delta` whose `nu(U)` falls below the chain bound;
    /// this would indicate an error in the regions or the distance.
    pub chain_failures: usize,
    /// Largest `nu(U)` among candidates with `nu(W) > 0`.
    pub best_u_with_w: f64,
    /// Candidates with `nu(U) >= 4/5` and `nu(W) > 0`.
    pub violations: usize,
    /// `4/5 - best_u_with_w`.
    pub margin: f64,
    pub note: String,
}

const NOTE: &str = "ergodic approximation is replaced by a search over empirical \
measures of seeded orbit segments and periodic orbits; the table shows how far \
they stay from nu(U) >= 4/5 with nu(W) > 0, it proves nothing";

/// `H`-orbit of a periodic stage point, with its period.
fn periodic_orbit(stage: &CarpetStage, u: &ExtendedPoint) -> Result<Option<Vec<ExtendedPoint>>, Error> {
    let u = stage.normalize(u)?;
    let mut orbit = vec![u.clone()];
    let mut cur = stage.apply(&u)?;
    while orbit.len() <= MAX_U_PERIOD {
        if stage.distance(&cur, &u) < 1e-9 {
            return Ok(Some(orbit));
        }
        orbit.push(cur.clone());
        cur = stage.apply(&cur)?;
    }
    Ok(None)
}

/// Check the parameters against every constraint and collect the failures.
fn violations(
    stage: &CarpetStage,
    saddle: &LocalSaddle,
    u_orbit: Option<&[ExtendedPoint]>,
    regions: &Regions,
    p: &ContradictionParams,
) -> Vec<String> {
    let mut out = Vec::new();
    if !(p.alpha > 0.0 && p.alpha < 0.1) {
        out.push(format!("alpha = {} is not in (0, 1/10)", p.alpha));
    }
    if !(p.delta > 0.0) {
        out.push(format!("delta = {} is not positive", p.delta));
    }
    if p.seeds == 0 && p.max_period < 1 {
        out.push("no candidates: seeds = 0 and max_period < 1".into());
    }
    if p.seeds > 0 && p.orbit_len < 2 {
        out.push(format!("orbit_len = {} is below 2", p.orbit_len));
    }
    match u_orbit {
        None => out.push(format!("u is not periodic with period <= {MAX_U_PERIOD}")),
        Some(orbit) => {
            let s = orbit.len();
            if p.delta >= 2.0 * s as f64 * p.alpha {
                out.push(format!("delta = {} is not below 2 s alpha = {}", p.delta, 2.0 * s as f64 * p.alpha));
            }
            if saddle.in_box(stage, &orbit[0]).is_some() {
                out.push("pi(u) lies in the box D".into());
            }
            let far = orbit.iter().all(|x| {
                let z = local_displacement(saddle.centre(), &stage.collapse(x));
                z[0].hypot(z[1]) > 3.0 * saddle.box_half()
            });
            if !far {
                out.push(format!(
                    "the orbit of u comes within 3 eps = {} of the saddle",
                    3.0 * saddle.box_half()
                ));
            }
        }
    }
    let margin = regions.margin(saddle);
    if margin < 2.0 * p.delta {
        out.push(format!("B(V, 2 delta) is not inside U: margin {margin} < 2 delta"));
    }
    if let Err(e) = regions.validate(stage, saddle) {
        out.push(e.to_string());
    }
    out
}

/// Seeded orbit of `T` from a uniform point of `W`.
fn seeded_candidate(
    stage: &CarpetStage,
    saddle: &LocalSaddle,
    regions: &Regions,
    seed: u64,
    len: usize,
) -> Result<Option<Vec<ExtendedPoint>>, Error> {
    let mut rng = stream_rng(seed, 1);
    let centre = *stage.embed(&regions.w.centre).rep();
    let r = regions.w.radius * rng.random::<f64>().sqrt();
    let t = rng.random_range(0.0..std::f64::consts::TAU);
    let start = stage.uncollapse(&project(&centre.translate([r * t.cos(), r * t.sin()])));
    if !regions.w.contains(stage, &start) {
        return Ok(None);
    }
    let mut orbit = vec![start];
    while orbit.len() < len {
        let next = saddle_step(stage, saddle, orbit.last().expect("non-empty"))?;
        orbit.push(next);
    }
    Ok(Some(orbit))
}

/// Empirical measures near the measure `(1 - alpha) delta_c + alpha/s sum
/// delta_(H^i u)` and their masses on `U` and `W`.
///
/// `c` is the boundary point of the saddle hole in the stable direction,
/// `U`, `V` are the standard sectors and `W = B(u, 2 delta)`.
pub fn contradiction_experiment(
    stage: &CarpetStage,
    saddle: &LocalSaddle,
    u: &ExtendedPoint,
    params: &ContradictionParams,
) -> Result<ContradictionReport, Error> {
    let u_orbit = periodic_orbit(stage, u)?;
    let regions = Regions::standard(saddle, stage.normalize(u)?, 2.0 * params.delta);
    let bad = violations(stage, saddle, u_orbit.as_deref(), &regions, params);
    if !bad.is_empty() {
        return Err(Error::ParameterViolations(bad));
    }
    let u_orbit = u_orbit.expect("checked above");
    let s = u_orbit.len();
    let space = StageSpace { stage };
    let c = saddle.stable_point(0);
    let mut atoms = vec![(c, 1.0 - params.alpha)];
    atoms.extend(u_orbit.iter().map(|x| (x.clone(), params.alpha / s as f64)));
    let mu_hat = DiscreteMeasure::new(&space, atoms)?;
    let mu_hat_v = mu_hat.mass_where(|x| regions.v.contains(saddle, stage, x));

    let evaluate = |source: CandidateSource, orbit: &[ExtendedPoint], closed: bool| -> Result<Candidate, Error> {
        let nu = empirical_measure(&space, orbit)?;
        let visits = excursion_report(stage, saddle, &regions, orbit)?;
        Ok(Candidate {
            source,
            points: orbit.len(),
            closed,
            rho: lp_distance(&space, &nu, &mu_hat)?,
            nu_u: nu.mass_where(|x| regions.u.contains(saddle, stage, x)),
            nu_w: nu.mass_where(|x| regions.w.contains(stage, x)),
            max_excursion_fraction: visits.max_fraction,
        })
    };

    let seeded: Vec<Option<Candidate>> = (0..params.seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = params.seed.wrapping_add(i);
            let Some(orbit) = seeded_candidate(stage, saddle, &regions, seed, params.orbit_len)? else {
                return Ok(None);
            };
            // cut at the last return to W so that the segment is a union of excursions
            let last = (1..orbit.len())
                .rev()
                .find(|&j| regions.w.contains(stage, &orbit[j]));
            let (segment, closed) = match last {
                Some(j) => (&orbit[..j], true),
                None => (&orbit[..], false),
            };
            evaluate(CandidateSource::Seeded { seed }, segment, closed).map(Some)
        })
        .collect::<Result<_, Error>>()?;
    let mut candidates: Vec<Candidate> = seeded.into_iter().flatten().collect();

    if params.max_period >= 1 {
        let plan = plan_orbits(stage.aut(), params.max_period)?;
        let blown: Vec<_> = stage.blown().iter().map(|o| o.points[0].clone()).collect();
        let q = saddle.power();
        for (plan_id, orbit) in plan.orbits.iter().enumerate() {
            if orbit.points.iter().any(|p| blown.contains(p)) {
                continue;
            }
            let pts: Vec<ExtendedPoint> = orbit
                .points
                .iter()
                .map(|p| stage.uncollapse(&p.to_float()))
                .collect();
            let period = pts.len();
            // G^q splits the orbit into gcd(period, q) orbits
            for offset in 0..period.gcd(&q) {
                let sub: Vec<ExtendedPoint> = (0..period / period.gcd(&q))
                    .map(|k| pts[(offset + k * q) % period].clone())
                    .collect();
                if sub.iter().any(|x| regions.w.contains(stage, x)) {
                    let source = CandidateSource::Periodic {
                        period,
                        plan_id,
                        offset,
                    };
                    candidates.push(evaluate(source, &sub, true)?);
                }
            }
        }
    }

    let chain_bound = mu_hat_v - params.delta;
    let min_rho = candidates.iter().map(|c| c.rho).fold(f64::INFINITY, f64::min);
    let within: Vec<&Candidate> = candidates.iter().filter(|c| c.rho < params.delta).collect();
    let chain_failures = within.iter().filter(|c| c.nu_u < chain_bound).count();
    let with_w = candidates.iter().filter(|c| c.nu_w > 0.0);
    let best_u_with_w = with_w.clone().map(|c| c.nu_u).fold(0.0, f64::max);
    let violations = with_w.filter(|c| c.nu_u >= 0.8).count();
    Ok(ContradictionReport {
        params: params.clone(),
        power: saddle.power(),
        u_period: s,
        regions,
        mu_hat,
        mu_hat_v,
        chain_bound,
        min_rho,
        within_delta: within.len(),
        chain_failures,
        best_u_with_w,
        violations,
        margin: 0.8 - best_u_with_w,
        candidates,
        note: NOTE.into(),
    })
}
