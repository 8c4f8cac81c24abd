use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::{CarpetStage, ExtendedPoint};
use crate::rng::stream_rng;
use crate::space::project_uniform;
use crate::Error;

const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportReport {
    pub seed: u64,
    pub samples: usize,
    pub stage_depth: usize,
    /// Cells per side of the mesh of the fundamental half-domain.
    pub grid: usize,
    /// Row-major sample counts, `counts[j * grid + i]` for the cell with
    /// `x` in `[i, i+1) / (2 grid)` and `y` in `[j, j+1) / grid`.
    pub counts: Vec<u64>,
    pub min_cell_mass: f64,
    /// Share of samples that land on regular points of the stage.
    pub regular_mass: f64,
    pub all_positive: bool,
}

/// Sample Lebesgue measure on the sphere, carry it into the stage through the
/// identification of regular points, and record how much mass each cell of a
/// `2^depth_grid` mesh receives.
///
/// The pushed measure gives the holes mass zero, so every cell meeting the
/// stage should be charged. Chunk `i` of the samples uses random stream `i`.
pub fn nu_support_evidence(
    stage: &CarpetStage,
    samples: usize,
    depth_grid: u32,
    seed: u64,
) -> Result<SupportReport, Error> {
    if samples < 1000 {
        return Err(crate::invalid("samples", "need at least 1000"));
    }
    if depth_grid > 10 {
        return Err(crate::invalid("depth_grid", "at most 10"));
    }
    let grid = 1usize << depth_grid;
    let chunks = samples.div_ceil(CHUNK);
    let (counts, regular) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let mut counts = vec![0u64; grid * grid];
            let mut regular = 0u64;
            let len = CHUNK.min(samples - c * CHUNK);
            for _ in 0..len {
                let s = project_uniform(rng.random(), rng.random());
                if let ExtendedPoint::Regular(z) = stage.uncollapse(&s) {
                    regular += 1;
                    let p = z.rep();
                    let i = ((2.0 * p.x * grid as f64) as usize).min(grid - 1);
                    let j = ((p.y * grid as f64) as usize).min(grid - 1);
                    counts[j * grid + i] += 1;
                }
            }
            (counts, regular)
        })
        .reduce(
            || (vec![0u64; grid * grid], 0),
            |(mut a, ra), (b, rb)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                (a, ra + rb)
            },
        );
    let n = samples as f64;
    let min = counts.iter().copied().min().unwrap_or(0);
    Ok(SupportReport {
        seed,
        samples,
        stage_depth: stage.depth(),
        grid,
        min_cell_mass: min as f64 / n,
        regular_mass: regular as f64 / n,
        all_positive: min > 0,
        counts,
    })
}
