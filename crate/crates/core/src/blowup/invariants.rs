//! Finite-depth checks of the carpet conditions: disjoint closed holes,
//! shrinking radii, and holes filling the sphere as depth grows.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stage::CarpetStage;
use crate::sphere::{distance_to_branch_set, project, sphere_metric};
use crate::toral::TorusPoint;

fn big(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite coordinates")
}

fn min_image_big(v: BigRational) -> BigRational {
    let f = &v - v.floor();
    if f > BigRational::new(BigInt::one(), BigInt::from(2)) {
        f - BigRational::one()
    } else {
        f
    }
}

fn torus_sq(a: &TorusPoint, b: &TorusPoint) -> BigRational {
    let dx = min_image_big(big(a.x) - big(b.x));
    let dy = min_image_big(big(a.y) - big(b.y));
    &dx * &dx + &dy * &dy
}

/// Squared pillowcase distance between the stored floating centres, evaluated
/// without rounding.
fn sphere_sq(a: &TorusPoint, b: &TorusPoint) -> BigRational {
    // distance to -b: the differences become sums
    let dx = min_image_big(big(a.x) + big(b.x));
    let dy = min_image_big(big(a.y) + big(b.y));
    torus_sq(a, b).min(&dx * &dx + &dy * &dy)
}

/// Squared distance to the branch set, without rounding.
fn branch_sq(a: &TorusPoint) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    let dx = min_image_big(big(a.x) * &two) / &two;
    let dy = min_image_big(big(a.y) * &two) / &two;
    &dx * &dx + &dy * &dy
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessReport {
    /// Closed holes pairwise disjoint, decided in exact rational arithmetic.
    pub discs_disjoint: bool,
    /// No closed hole contains a branch point, also exact.
    pub avoids_branch_set: bool,
    /// Collars of one orbit are disjoint, and each newer collar sits inside
    /// an older collar annulus or outside that collar (floating point).
    pub collars_nested: bool,
    pub pairs_checked: usize,
    /// Smallest `d(c, c') - r - r'` over pairs, floating point.
    pub min_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub radii: Vec<f64>,
    pub non_increasing: bool,
    /// `r_k <= r0 2^-k` for every `k`.
    pub within_envelope: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub depth: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub delta: f64,
    pub grid: usize,
    pub points: Vec<DensityPoint>,
    pub strictly_increasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarpetReport {
    pub depth: usize,
    pub s1: DisjointnessReport,
    pub s2: RadiusReport,
    pub s3: DensityReport,
    pub complement_connected: bool,
    pub passed: bool,
}

fn disjointness(stage: &CarpetStage) -> DisjointnessReport {
    let kappa = stage.schedule().collar_factor;
    let holes: Vec<(usize, &TorusPoint, f64)> = stage
        .blown()
        .iter()
        .enumerate()
        .flat_map(|(k, o)| o.charts.iter().map(move |c| (k, &c.lift, o.radius)))
        .collect();
    let rows: Vec<(bool, bool, bool, f64)> = (0..holes.len())
        .into_par_iter()
        .map(|a| {
            let (ka, la, ra) = holes[a];
            let ra_big = big(ra);
            let clear = branch_sq(la) > &ra_big * &ra_big;
            let mut nested = distance_to_branch_set(la) > kappa * ra;
            let mut discs = true;
            let mut gap = f64::INFINITY;
            for &(kb, lb, rb) in &holes[a + 1..] {
                let d = la.torus_distance(lb).min(la.torus_distance(&lb.neg()));
                gap = gap.min(d - ra - rb);
                nested &= if ka == kb {
                    d > kappa * (ra + rb)
                } else {
                    // b is newer: its collar avoids a's hole and a's collar edge
                    kappa * rb < d - ra && kappa * rb < (d - kappa * ra).abs()
                };
                let reach = &ra_big + big(rb);
                discs &= sphere_sq(la, lb) > &reach * &reach;
            }
            (discs, clear, nested, gap)
        })
        .collect();
    let n = holes.len();
    DisjointnessReport {
        discs_disjoint: rows.iter().all(|r| r.0),
        avoids_branch_set: rows.iter().all(|r| r.1),
        collars_nested: rows.iter().all(|r| r.2),
        pairs_checked: n * n.saturating_sub(1) / 2,
        min_gap: rows.iter().map(|r| r.3).fold(f64::INFINITY, f64::min),
    }
}

fn radii(stage: &CarpetStage) -> RadiusReport {
    let radii: Vec<f64> = stage.blown().iter().map(|o| o.radius).collect();
    RadiusReport {
        non_increasing: radii.windows(2).all(|w| w[1] <= w[0]),
        within_envelope: radii
            .iter()
            .enumerate()
            .all(|(k, r)| *r <= stage.schedule().envelope(k + 1)),
        radii,
    }
}

fn cell_center(grid: usize, i: usize, j: usize) -> TorusPoint {
    let g = grid as f64;
    TorusPoint::new((i as f64 + 0.5) / g, (j as f64 + 0.5) / g)
}

/// For each cell of a `grid x grid` torus mesh, the first blown orbit whose
/// holes come within `delta` of the cell centre (`usize::MAX` if none).
fn first_covering_orbit(stage: &CarpetStage, grid: usize, delta: f64) -> Vec<usize> {
    (0..grid * grid)
        .into_par_iter()
        .map(|cell| {
            let s = project(&cell_center(grid, cell / grid, cell % grid));
            stage
                .blown()
                .iter()
                .position(|o| {
                    o.charts
                        .iter()
                        .any(|c| sphere_metric(&s, &c.center) <= delta + o.radius)
                })
                .unwrap_or(usize::MAX)
        })
        .collect()
}

/// Fraction of mesh cells within `delta` of a hole of the first `depth` orbits,
/// for each requested depth. Torus cells weight the sphere uniformly.
pub fn density_fraction(
    stage: &CarpetStage,
    grid: usize,
    delta: f64,
    depths: &[usize],
) -> Vec<DensityPoint> {
    let first = first_covering_orbit(stage, grid, delta);
    let total = first.len() as f64;
    depths
        .iter()
        .map(|&depth| DensityPoint {
            depth,
            fraction: first.iter().filter(|&&k| k < depth).count() as f64 / total,
        })
        .collect()
}

/// Flood fill of the torus mesh cells whose centres avoid every open hole.
pub fn complement_connected(stage: &CarpetStage, grid: usize) -> bool {
    let free: Vec<bool> = (0..grid * grid)
        .into_par_iter()
        .map(|cell| !stage.in_hole(&project(&cell_center(grid, cell / grid, cell % grid))))
        .collect();
    let Some(start) = free.iter().position(|&f| f) else {
        return false;
    };
    let mut seen = vec![false; free.len()];
    seen[start] = true;
    let mut stack = vec![start];
    let mut reached = 1;
    while let Some(cell) = stack.pop() {
        let (i, j) = (cell / grid, cell % grid);
        let nbrs = [
            ((i + 1) % grid, j),
            ((i + grid - 1) % grid, j),
            (i, (j + 1) % grid),
            (i, (j + grid - 1) % grid),
        ];
        for (a, b) in nbrs {
            let n = a * grid + b;
            if free[n] && !seen[n] {
                seen[n] = true;
                reached += 1;
                stack.push(n);
            }
        }
    }
    reached == free.iter().filter(|&&f| f).count()
}

/// Check the carpet conditions on a stage. Density is reported at each of
/// `depths` not exceeding the stage depth (and at the stage depth itself when
/// `depths` is empty).
pub fn carpet_invariants(
    stage: &CarpetStage,
    grid: usize,
    delta: f64,
    depths: &[usize],
) -> CarpetReport {
    let grid = grid.max(8);
    let mut ds: Vec<usize> = depths.iter().copied().filter(|&d| d <= stage.depth()).collect();
    if ds.is_empty() {
        ds.push(stage.depth());
    }
    let points = density_fraction(stage, grid, delta, &ds);
    let s3 = DensityReport {
        delta,
        grid,
        strictly_increasing: points.windows(2).all(|w| w[1].fraction > w[0].fraction),
        points,
    };
    let s1 = disjointness(stage);
    let s2 = radii(stage);
    let complement_connected = complement_connected(stage, grid);
    let passed = s1.discs_disjoint
        && s1.avoids_branch_set
        && s1.collars_nested
        && s2.non_increasing
        && s2.within_envelope
        && s3.strictly_increasing
        && complement_connected;
    CarpetReport {
        depth: stage.depth(),
        s1,
        s2,
        s3,
        complement_connected,
        passed,
    }
}
