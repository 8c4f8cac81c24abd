//! Specification: a finite-scale tracing test, the saddle visit-time lemma,
//! and the experiment near a blown-up saddle.

mod contradiction;
mod local;
mod saddle;
mod visit;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use contradiction::{
    contradiction_experiment, Candidate, CandidateSource, ContradictionParams, ContradictionReport,
};
pub use local::{BallRegion, LocalSaddle, Regions, SectorRegion};
pub use saddle::{saddle_exit_time, saddle_reach, SaddleExit, SaddleModel};
pub use visit::{
    excursion_report, saddle_step, seeded_orbit, visit_fraction, Excursion, OrbitStart, VisitReport,
    VISIT_TOLERANCE,
};

use crate::blowup::{ExtendedPoint, CarpetStage};
use crate::space::{DynamicalSystem, MetricSpace, Power, SphereMap, StageMap, TorusMap};
use crate::sphere::project;
use crate::toral::TorusPoint;
use crate::Error;

/// One orbit segment to be traced: times `start..=end` of the orbit of `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment<P> {
    pub base: P,
    pub start: usize,
    pub end: usize,
}

/// `0 = j_1 <= k_1 < j_2 <= k_2 < ...` with `j_(m+1) - k_m >= gap`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecInstance<P> {
    pub epsilon: f64,
    pub gap: usize,
    pub segments: Vec<Segment<P>>,
}

impl<P> SpecInstance<P> {
    pub fn new(epsilon: f64, gap: usize, segments: Vec<Segment<P>>) -> Result<Self, Error> {
        let inst = Self {
            epsilon,
            gap,
            segments,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(crate::invalid("epsilon", "must be positive"));
        }
        let first = self
            .segments
            .first()
            .ok_or_else(|| crate::invalid("segments", "empty"))?;
        if first.start != 0 {
            return Err(crate::invalid("segments", "the first segment starts at time 0"));
        }
        for (m, s) in self.segments.iter().enumerate() {
            if s.start > s.end {
                return Err(crate::invalid("segments", format!("segment {m} ends before it starts")));
            }
        }
        for (m, w) in self.segments.windows(2).enumerate() {
            if w[1].start <= w[0].end || w[1].start - w[0].end < self.gap {
                return Err(crate::invalid(
                    "segments",
                    format!("gap between segments {m} and {} is below {}", m + 1, self.gap),
                ));
            }
        }
        Ok(())
    }

    /// Last time that has to be traced.
    pub fn horizon(&self) -> usize {
        self.segments.last().map_or(0, |s| s.end)
    }
}

impl<P: Clone> SpecInstance<P> {
    /// The instance for `T` whose witnesses trace this instance for `T^p`:
    /// every time is multiplied by `p`.
    pub fn lift(&self, p: usize) -> Self {
        Self {
            epsilon: self.epsilon,
            gap: self.gap * p,
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    base: s.base.clone(),
                    start: s.start * p,
                    end: s.end * p,
                })
                .collect(),
        }
    }
}

/// Gap after which an expansion rate `lambda > 1` stretches `epsilon` past the
/// diameter scale: `ceil(log(4 / epsilon) / log(lambda))`.
pub fn expansion_gap(lambda: f64, epsilon: f64) -> usize {
    ((4.0 / epsilon).ln() / lambda.ln()).ceil().max(1.0) as usize
}

/// Systems that can list candidate starting points near a given point.
pub trait TraceCandidates: DynamicalSystem {
    /// `centre` followed by a `grid x grid` mesh of points within `radius` of it.
    fn candidates(
        &self,
        centre: &<Self::Space as MetricSpace>::Point,
        radius: f64,
        grid: usize,
    ) -> Vec<<Self::Space as MetricSpace>::Point>;
}

fn offsets(radius: f64, grid: usize) -> impl Iterator<Item = [f64; 2]> {
    let step = 2.0 * radius / grid as f64;
    (0..grid * grid).filter_map(move |c| {
        let v = [
            -radius + step * ((c % grid) as f64 + 0.5),
            -radius + step * ((c / grid) as f64 + 0.5),
        ];
        (v[0].hypot(v[1]) < radius).then_some(v)
    })
}

impl TraceCandidates for TorusMap {
    fn candidates(&self, centre: &TorusPoint, radius: f64, grid: usize) -> Vec<TorusPoint> {
        std::iter::once(*centre)
            .chain(offsets(radius, grid).map(|v| centre.translate(v)))
            .collect()
    }
}

impl TraceCandidates for SphereMap {
    fn candidates(
        &self,
        centre: &crate::sphere::FloatSpherePoint,
        radius: f64,
        grid: usize,
    ) -> Vec<crate::sphere::FloatSpherePoint> {
        let lift = *centre.rep();
        std::iter::once(centre.clone())
            .chain(offsets(radius, grid).map(|v| project(&lift.translate(v))))
            .collect()
    }
}

impl TraceCandidates for StageMap<'_> {
    /// Regular points of the mesh outside the holes, and `grid` angles on
    /// each boundary circle that comes within `radius`.
    fn candidates(&self, centre: &ExtendedPoint, radius: f64, grid: usize) -> Vec<ExtendedPoint> {
        let stage: &CarpetStage = self.stage();
        let lift = *stage.embed(centre).rep();
        let mut out = vec![centre.clone()];
        for v in offsets(radius, grid) {
            let s = project(&lift.translate(v));
            if !stage.in_hole(&s) {
                if let Ok(p) = stage.normalize(&ExtendedPoint::Regular(s)) {
                    out.push(p);
                }
            }
        }
        for (k, orbit) in stage.blown().iter().enumerate() {
            for index in 0..orbit.period() {
                for t in 0..grid {
                    let angle = -std::f64::consts::PI
                        + 2.0 * std::f64::consts::PI * (t as f64 + 0.5) / grid as f64;
                    let p = ExtendedPoint::Boundary {
                        orbit: k,
                        index,
                        angle,
                    };
                    if stage.distance(&p, centre) < radius {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

impl<S: TraceCandidates> TraceCandidates for Power<S> {
    fn candidates(
        &self,
        centre: &<S::Space as MetricSpace>::Point,
        radius: f64,
        grid: usize,
    ) -> Vec<<S::Space as MetricSpace>::Point> {
        self.inner.candidates(centre, radius, grid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceOutcome<P> {
    pub found: bool,
    /// The first candidate within `epsilon` on every segment, if any.
    pub witness: Option<P>,
    /// Candidate with the smallest defect.
    pub best: P,
    /// Largest tracing error of `best` over all segment times.
    pub best_defect: f64,
    pub candidates: usize,
}

/// Largest `d(T^i x, T^i y_m)` over all segments, infinite if the orbit of
/// `x` cannot be computed.
pub fn tracing_defect<S: DynamicalSystem>(
    system: &S,
    instance: &SpecInstance<<S::Space as MetricSpace>::Point>,
    targets: &[Vec<<S::Space as MetricSpace>::Point>],
    x: &<S::Space as MetricSpace>::Point,
) -> f64 {
    let Ok(orbit) = system.orbit(x, instance.horizon() + 1) else {
        return f64::INFINITY;
    };
    let space = system.space();
    let mut worst: f64 = 0.0;
    for (seg, target) in instance.segments.iter().zip(targets) {
        for (i, y) in (seg.start..=seg.end).zip(target) {
            worst = worst.max(space.distance(&orbit[i], y));
        }
    }
    worst
}

/// `(i, d(T^i x, T^i y_m))` for every traced time, in time order.
pub fn defect_series<S: DynamicalSystem>(
    system: &S,
    instance: &SpecInstance<<S::Space as MetricSpace>::Point>,
    targets: &[Vec<<S::Space as MetricSpace>::Point>],
    x: &<S::Space as MetricSpace>::Point,
) -> Result<Vec<(usize, f64)>, Error> {
    let orbit = system.orbit(x, instance.horizon() + 1)?;
    let space = system.space();
    Ok(instance
        .segments
        .iter()
        .zip(targets)
        .flat_map(|(seg, target)| (seg.start..=seg.end).zip(target))
        .map(|(i, y)| (i, space.distance(&orbit[i], y)))
        .collect())
}

/// Orbit points `T^i y_m` for the times of each segment.
pub fn segment_targets<S: DynamicalSystem>(
    system: &S,
    instance: &SpecInstance<<S::Space as MetricSpace>::Point>,
) -> Result<Vec<Vec<<S::Space as MetricSpace>::Point>>, Error> {
    instance
        .segments
        .iter()
        .map(|s| {
            let o = system.orbit(&s.base, s.end + 1)?;
            Ok(o[s.start..].to_vec())
        })
        .collect()
}

/// Brute-force search for a point tracing every segment within `epsilon`.
///
/// A witness lies within `epsilon` of the first base point, so candidates are
/// a `grid x grid` mesh of that ball (plus boundary angles on carpet stages).
pub fn trace_search<S: TraceCandidates>(
    system: &S,
    instance: &SpecInstance<<S::Space as MetricSpace>::Point>,
    grid: usize,
) -> Result<TraceOutcome<<S::Space as MetricSpace>::Point>, Error> {
    instance.validate()?;
    if grid < 32 {
        return Err(crate::invalid("grid", "must be at least 32"));
    }
    let targets = segment_targets(system, instance)?;
    let cands = system.candidates(&instance.segments[0].base, instance.epsilon, grid);
    let defects: Vec<f64> = cands
        .par_iter()
        .map(|x| tracing_defect(system, instance, &targets, x))
        .collect();
    let first = defects.iter().position(|&d| d < instance.epsilon);
    let best = (0..defects.len())
        .min_by(|&i, &j| defects[i].total_cmp(&defects[j]))
        .expect("the centre is always a candidate");
    Ok(TraceOutcome {
        found: first.is_some(),
        witness: first.map(|i| cands[i].clone()),
        best: cands[best].clone(),
        best_defect: defects[best],
        candidates: cands.len(),
    })
}
