use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use carpet_core::blowup::{build_stage, plan_orbits, CarpetStage, ExtendedPoint, RadiusSchedule};
use carpet_core::rng::stream_rng;
use carpet_core::space::{StageMap, TorusMap};
use carpet_core::specification::{
    contradiction_experiment, defect_series, excursion_report, expansion_gap, saddle_exit_time, seeded_orbit,
    segment_targets, trace_search, visit_fraction, ContradictionParams, ContradictionReport, LocalSaddle,
    OrbitStart, Regions, SaddleModel, Segment, SpecInstance,
};
use carpet_core::toral::{ToralAutomorphism, TorusPoint};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::run::{resolve, RunDir};
use crate::Outcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    pub epsilons: Vec<f64>,
    /// Random two-segment instances per epsilon.
    pub instances: usize,
    /// Longest segment, in steps.
    pub max_len: usize,
    pub grid: usize,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.2, 0.1],
            instances: 100,
            max_len: 3,
            grid: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaddleSweepConfig {
    pub draws: usize,
    /// Range of the contraction rate `a`; the expansion rate is `1 / a`.
    pub a_min: f64,
    pub a_max: f64,
    /// `log10(|q| / |p|)` is drawn from `[min_log_ratio, 0]`.
    pub min_log_ratio: f64,
}

impl Default for SaddleSweepConfig {
    fn default() -> Self {
        Self {
            draws: 10_000,
            a_min: 0.05,
            a_max: 0.8,
            min_log_ratio: -8.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CarpetConfig {
    /// Stage document; without one a stage is built from `max_period` and `depth`.
    pub stage: Option<PathBuf>,
    pub max_period: i64,
    pub depth: usize,
    /// Blown orbit that plays the saddle.
    pub orbit: usize,
    /// Torus coordinates of the spared periodic point `u`.
    pub u: [f64; 2],
    /// Radius of `W` around `u` for the visit statistics.
    pub w_radius: f64,
    pub seeds: usize,
    pub orbit_len: usize,
    /// Length of one long orbit from a fixed start; 0 skips it.
    pub long_run: usize,
    /// Steps spent along the stable boundary point in the adversarial instance.
    pub adversarial_steps: usize,
}

impl Default for CarpetConfig {
    fn default() -> Self {
        Self {
            stage: None,
            max_period: 6,
            depth: 1,
            orbit: 0,
            u: [0.4, 0.8],
            w_radius: 0.05,
            seeds: 1000,
            orbit_len: 2000,
            long_run: 1_000_000,
            adversarial_steps: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpecConfig {
    pub matrix: ToralAutomorphism,
    pub control: ControlConfig,
    pub saddle: SaddleSweepConfig,
    pub carpet: CarpetConfig,
    pub contradiction: ContradictionParams,
    /// Largest per-excursion U-fraction accepted.
    pub visit_bound: f64,
}

impl Default for SpecConfig {
    fn default() -> Self {
        Self {
            matrix: ToralAutomorphism::cat_map(),
            control: ControlConfig::default(),
            saddle: SaddleSweepConfig::default(),
            carpet: CarpetConfig::default(),
            contradiction: ContradictionParams::default(),
            visit_bound: 0.55,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlRow {
    pub epsilon: f64,
    pub case: usize,
    pub gap: usize,
    pub len1: usize,
    pub len2: usize,
    pub found: bool,
    pub best_defect: f64,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaddleSummary {
    pub draws: usize,
    pub bound_ok: usize,
    pub max_m: u32,
    /// `m` for `(a, b, eps, p, q) = (1/2, 2, 0.08, 0.08, 0.0008)`.
    pub worked_m: u32,
    pub worked_bound_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisitRow {
    pub seed: u64,
    pub start: OrbitStart,
    pub excursions: usize,
    pub max_fraction: f64,
    pub passages: usize,
    pub passage_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisitSummary {
    pub seeds: usize,
    pub excursions: usize,
    pub worst_fraction: f64,
    pub passages: usize,
    pub passage_violations: usize,
    pub long_run_fraction: Option<f64>,
    pub long_run_max_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversarialSummary {
    pub epsilon: f64,
    pub gap: usize,
    pub found: bool,
    pub best_defect: f64,
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct DefectRow {
    time: usize,
    defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct CandidateRow {
    source: String,
    points: usize,
    closed: bool,
    rho: f64,
    nu_u: f64,
    nu_w: f64,
    max_excursion_fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecReport {
    pub control_found: usize,
    pub control_total: usize,
    pub saddle: SaddleSummary,
    pub visits: VisitSummary,
    pub adversarial: AdversarialSummary,
    pub contradiction: ContradictionSummary,
    pub passed: bool,
}

/// The contradiction report without its candidate list, which goes to CSV.
#[derive(Clone, Debug, Serialize)]
pub struct ContradictionSummary {
    pub power: usize,
    pub u_period: usize,
    pub candidates: usize,
    pub min_rho: f64,
    pub within_delta: usize,
    pub chain_bound: f64,
    pub chain_failures: usize,
    pub best_u_with_w: f64,
    pub violations: usize,
    pub margin: f64,
    pub note: String,
}

impl From<&ContradictionReport> for ContradictionSummary {
    fn from(r: &ContradictionReport) -> Self {
        Self {
            power: r.power,
            u_period: r.u_period,
            candidates: r.candidates.len(),
            min_rho: r.min_rho,
            within_delta: r.within_delta,
            chain_bound: r.chain_bound,
            chain_failures: r.chain_failures,
            best_u_with_w: r.best_u_with_w,
            violations: r.violations,
            margin: r.margin,
            note: r.note.clone(),
        }
    }
}

/// Tracing searches for random two-segment instances of the toral map.
pub fn control(aut: &ToralAutomorphism, cfg: &ControlConfig, seed: u64) -> Result<Vec<ControlRow>> {
    let lu = aut.eigen().context("field `matrix`")?.lambda_u;
    let system = TorusMap::new(aut.clone());
    let mut rng = stream_rng(seed, 3);
    let mut rows = Vec::new();
    for &eps in &cfg.epsilons {
        let gap = expansion_gap(lu, eps);
        for case in 0..cfg.instances {
            let y1 = TorusPoint::new(rng.random(), rng.random());
            let y2 = TorusPoint::new(rng.random(), rng.random());
            let l1 = rng.random_range(0..=cfg.max_len);
            let l2 = rng.random_range(0..=cfg.max_len);
            let inst = SpecInstance::new(
                eps,
                gap,
                vec![
                    Segment { base: y1, start: 0, end: l1 },
                    Segment { base: y2, start: l1 + gap, end: l1 + gap + l2 },
                ],
            )
            .with_context(|| format!("control instance at epsilon {eps}"))?;
            let out = trace_search(&system, &inst, cfg.grid).context("field `control`")?;
            rows.push(ControlRow {
                epsilon: eps,
                case,
                gap,
                len1: l1,
                len2: l2,
                found: out.found,
                best_defect: out.best_defect,
                candidates: out.candidates,
            });
        }
    }
    Ok(rows)
}

/// Exit times of random points of the stable side of random saddles.
pub fn saddle_sweep(cfg: &SaddleSweepConfig, seed: u64) -> Result<SaddleSummary> {
    if !(0.0 < cfg.a_min && cfg.a_min < cfg.a_max && cfg.a_max < 1.0) {
        anyhow::bail!("field `saddle`: need 0 < a_min < a_max < 1");
    }
    let mut rng = stream_rng(seed, 4);
    let (mut ok, mut max_m) = (0, 0);
    for _ in 0..cfg.draws {
        let a = rng.random_range(cfg.a_min..cfg.a_max);
        let eps = rng.random_range(0.01..1.0);
        let model = SaddleModel::new(a, 1.0 / a, eps)?;
        let p = eps * rng.random_range(1e-9..1.0) * if rng.random() { 1.0 } else { -1.0 };
        let q = p.abs() * 10f64.powf(rng.random_range(cfg.min_log_ratio..0.0)) * if rng.random() { 1.0 } else { -1.0 };
        let exit = saddle_exit_time(&model, p, q).with_context(|| format!("saddle draw a = {a}, p = {p}, q = {q}"))?;
        ok += exit.bound_ok as usize;
        max_m = max_m.max(exit.m);
    }
    let worked = saddle_exit_time(&SaddleModel::new(0.5, 2.0, 0.08)?, 0.08, 0.0008)?;
    Ok(SaddleSummary {
        draws: cfg.draws,
        bound_ok: ok,
        max_m,
        worked_m: worked.m,
        worked_bound_ok: worked.bound_ok,
    })
}

fn carpet_stage(aut: &ToralAutomorphism, cfg: &CarpetConfig, config: Option<&Path>) -> Result<CarpetStage> {
    match &cfg.stage {
        Some(p) => {
            let path = resolve(config, p);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("field `carpet.stage`: reading {}", path.display()))?;
            Ok(CarpetStage::from_json(&text)?)
        }
        None => {
            let plan = plan_orbits(aut, cfg.max_period)?;
            Ok(build_stage(&plan, cfg.depth, &RadiusSchedule::default())?)
        }
    }
}

/// Excursion statistics over seeded orbits; even seeds start uniformly, odd
/// seeds pass close to the saddle.
pub fn visits(
    stage: &CarpetStage,
    saddle: &LocalSaddle,
    regions: &Regions,
    cfg: &CarpetConfig,
    seed: u64,
) -> Result<(Vec<VisitRow>, VisitSummary)> {
    let mut rows = Vec::with_capacity(cfg.seeds);
    for i in 0..cfg.seeds as u64 {
        let s = seed.wrapping_add(i);
        let start = if i % 2 == 0 { OrbitStart::Uniform } else { OrbitStart::NearStableArc };
        let orbit = seeded_orbit(stage, saddle, start, s, cfg.orbit_len)?;
        let r = excursion_report(stage, saddle, regions, &orbit)?;
        rows.push(VisitRow {
            seed: s,
            start,
            excursions: r.excursions.len(),
            max_fraction: r.max_fraction,
            passages: r.passages,
            passage_violations: r.passage_violations,
        });
    }
    let long = if cfg.long_run > 0 {
        let start = ExtendedPoint::regular(TorusPoint::new(0.123, 0.456));
        Some(visit_fraction(stage, saddle, &start, cfg.long_run, regions)?)
    } else {
        None
    };
    let summary = VisitSummary {
        seeds: rows.len(),
        excursions: rows.iter().map(|r| r.excursions).sum(),
        worst_fraction: rows.iter().map(|r| r.max_fraction).fold(0.0, f64::max),
        passages: rows.iter().map(|r| r.passages).sum::<usize>() + long.as_ref().map_or(0, |l| l.passages),
        passage_violations: rows.iter().map(|r| r.passage_violations).sum::<usize>()
            + long.as_ref().map_or(0, |l| l.passage_violations),
        long_run_fraction: long.as_ref().and_then(|l| l.long_run_fraction),
        long_run_max_fraction: long.as_ref().map(|l| l.max_fraction),
    };
    Ok((rows, summary))
}

/// Follow the stable boundary point for a while, then jump to `u` after the
/// expansion gap.
fn adversarial(
    stage: &CarpetStage,
    saddle: &LocalSaddle,
    u: &ExtendedPoint,
    steps: usize,
) -> Result<(AdversarialSummary, Vec<DefectRow>)> {
    let lu = stage.aut().eigen()?.lambda_u;
    let eps = saddle.radius() / 2.0;
    let gap = expansion_gap(lu, eps);
    let inst = SpecInstance::new(
        eps,
        gap,
        vec![
            Segment { base: saddle.stable_point(0), start: 0, end: steps },
            Segment { base: u.clone(), start: steps + gap, end: steps + gap },
        ],
    )?;
    let system = StageMap::new(stage);
    let out = trace_search(&system, &inst, 256)?;
    let targets = segment_targets(&system, &inst)?;
    let series = defect_series(&system, &inst, &targets, &out.best)?
        .into_iter()
        .map(|(time, defect)| DefectRow { time, defect })
        .collect();
    Ok((
        AdversarialSummary {
            epsilon: eps,
            gap,
            found: out.found,
            best_defect: out.best_defect,
            candidates: out.candidates,
        },
        series,
    ))
}

pub fn run(config: Option<&Path>, seed: u64, out: &Path) -> Result<Outcome> {
    let cfg: SpecConfig = crate::config::load(config)?;
    crate::config::check_matrix(&cfg.matrix)?;
    let dir = RunDir::create(out, "spec", &cfg, seed)?;

    let control_rows = control(&cfg.matrix, &cfg.control, seed)?;
    dir.write_csv("control.csv", &control_rows)?;
    let saddle_summary = saddle_sweep(&cfg.saddle, seed)?;

    let stage = carpet_stage(&cfg.matrix, &cfg.carpet, config)?;
    let saddle = LocalSaddle::new(&stage, cfg.carpet.orbit).context("field `carpet.orbit`")?;
    let u = stage.normalize(&ExtendedPoint::regular(TorusPoint::new(cfg.carpet.u[0], cfg.carpet.u[1])))?;
    let regions = Regions::standard(&saddle, u.clone(), cfg.carpet.w_radius);
    regions.validate(&stage, &saddle).context("field `carpet.w_radius`")?;
    let (visit_rows, visit_summary) = visits(&stage, &saddle, &regions, &cfg.carpet, seed)?;
    dir.write_csv("visits.csv", &visit_rows)?;

    let (adv, defects) = adversarial(&stage, &saddle, &u, cfg.carpet.adversarial_steps)?;
    dir.write_csv("adversarial_defects.csv", &defects)?;

    let params = ContradictionParams {
        seed: cfg.contradiction.seed.wrapping_add(seed),
        ..cfg.contradiction.clone()
    };
    let contra = contradiction_experiment(&stage, &saddle, &u, &params).context("field `contradiction`")?;
    let candidate_rows: Vec<CandidateRow> = contra
        .candidates
        .iter()
        .map(|c| CandidateRow {
            source: serde_json::to_string(&c.source).unwrap_or_default(),
            points: c.points,
            closed: c.closed,
            rho: c.rho,
            nu_u: c.nu_u,
            nu_w: c.nu_w,
            max_excursion_fraction: c.max_excursion_fraction,
        })
        .collect();
    dir.write_csv("candidates.csv", &candidate_rows)?;

    let control_found = control_rows.iter().filter(|r| r.found).count();
    let contradiction = ContradictionSummary::from(&contra);
    let passed = control_found == control_rows.len()
        && saddle_summary.bound_ok == saddle_summary.draws
        && saddle_summary.worked_m == 3
        && visit_summary.worst_fraction <= cfg.visit_bound
        && visit_summary.passage_violations == 0
        && !adv.found
        && contradiction.violations == 0
        && contradiction.chain_failures == 0;
    let report = SpecReport {
        control_found,
        control_total: control_rows.len(),
        saddle: saddle_summary,
        visits: visit_summary,
        adversarial: adv,
        contradiction,
        passed,
    };
    dir.write_json("report.json", &report)?;
    Ok(Outcome {
        passed,
        summary: format!(
            "control {}/{}, saddle {}/{} bound_ok, worst U-fraction {:.3}, adversarial found {}, margin {:.3}",
            report.control_found,
            report.control_total,
            report.saddle.bound_ok,
            report.saddle.draws,
            report.visits.worst_fraction,
            report.adversarial.found,
            report.contradiction.margin
        ),
    })
}
