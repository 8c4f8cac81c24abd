use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use carpet_core::blowup::{build_stage, plan_orbits, CarpetStage, RadiusSchedule};
use carpet_core::measure::{birkhoff_series, character_correlation, nu_support_evidence, SupportReport};
use carpet_core::rng::stream_rng;
use carpet_core::space::DyadicTorusMap;
use carpet_core::toral::ToralAutomorphism;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::run::{resolve, RunDir};
use crate::Outcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationConfig {
    pub k: [i128; 2],
    pub l: [i128; 2],
    pub n_max: u32,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        Self {
            k: [1, 0],
            l: [1, 0],
            n_max: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BirkhoffConfig {
    /// Number of seeded starting points.
    pub starts: usize,
    /// Increasing checkpoints; the last one is judged.
    pub checkpoints: Vec<usize>,
    pub tolerance: f64,
}

impl Default for BirkhoffConfig {
    fn default() -> Self {
        Self {
            starts: 4,
            checkpoints: vec![1_000, 10_000, 100_000, 1_000_000],
            tolerance: 5e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SupportConfig {
    /// Stage document; without one a stage of `depth` orbits is built.
    pub stage: Option<PathBuf>,
    pub max_period: i64,
    pub depth: usize,
    pub samples: usize,
    /// The mesh has `2^depth_grid` cells per side.
    pub depth_grid: u32,
}

impl Default for SupportConfig {
    fn default() -> Self {
        Self {
            stage: None,
            max_period: 8,
            depth: 10,
            samples: 100_000,
            depth_grid: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixingConfig {
    pub matrix: ToralAutomorphism,
    pub correlation: CorrelationConfig,
    pub birkhoff: BirkhoffConfig,
    pub support: SupportConfig,
}

impl Default for MixingConfig {
    fn default() -> Self {
        Self {
            matrix: ToralAutomorphism::cat_map(),
            correlation: CorrelationConfig::default(),
            birkhoff: BirkhoffConfig::default(),
            support: SupportConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub n: u32,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BirkhoffRow {
    pub start: usize,
    pub n: usize,
    pub cos_average: f64,
    pub constant_average: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingReport {
    pub correlations_zero: bool,
    /// Largest `|average of cos(2 pi x)|` at the last checkpoint.
    pub birkhoff_worst: f64,
    pub birkhoff_ok: bool,
    pub constant_exact: bool,
    pub support: SupportReport,
    pub passed: bool,
}

pub fn correlations(aut: &ToralAutomorphism, cfg: &CorrelationConfig) -> Result<Vec<CorrelationRow>> {
    (1..=cfg.n_max)
        .map(|n| {
            let c = character_correlation(aut, cfg.k, cfg.l, n).with_context(|| format!("correlation at n = {n}"))?;
            Ok(CorrelationRow { n, re: c.re, im: c.im })
        })
        .collect()
}

/// Birkhoff series on the exact dyadic orbit; start `i` uses stream `i` of the seed.
pub fn birkhoff(aut: &ToralAutomorphism, cfg: &BirkhoffConfig, seed: u64) -> Result<Vec<BirkhoffRow>> {
    let map = DyadicTorusMap::new(aut);
    let mut rows = Vec::new();
    for i in 0..cfg.starts {
        let mut rng = stream_rng(seed, i as u64);
        let start = DyadicTorusMap::from_unit(rng.random(), rng.random());
        let cos = birkhoff_series(&map, |p| (TAU * DyadicTorusMap::to_torus(*p).x).cos(), &start, &cfg.checkpoints)
            .context("field `birkhoff.checkpoints`")?;
        let one = birkhoff_series(&map, |_| 1.0, &start, &cfg.checkpoints)?;
        for ((n, c), (_, o)) in cos.into_iter().zip(one) {
            rows.push(BirkhoffRow {
                start: i,
                n,
                cos_average: c,
                constant_average: o,
            });
        }
    }
    Ok(rows)
}

fn support_stage(cfg: &SupportConfig, aut: &ToralAutomorphism, config: Option<&Path>) -> Result<CarpetStage> {
    match &cfg.stage {
        Some(p) => {
            let path = resolve(config, p);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("field `support.stage`: reading {}", path.display()))?;
            Ok(CarpetStage::from_json(&text)?)
        }
        None => {
            let plan = plan_orbits(aut, cfg.max_period)?;
            Ok(build_stage(&plan, cfg.depth, &RadiusSchedule::default())?)
        }
    }
}

pub fn run(config: Option<&Path>, seed: u64, out: &Path) -> Result<Outcome> {
    let cfg: MixingConfig = crate::config::load(config)?;
    crate::config::check_matrix(&cfg.matrix)?;
    if cfg.birkhoff.starts == 0 || cfg.birkhoff.checkpoints.is_empty() {
        anyhow::bail!("field `birkhoff`: need at least one start and one checkpoint");
    }
    let dir = RunDir::create(out, "mixing", &cfg, seed)?;

    let corr = correlations(&cfg.matrix, &cfg.correlation)?;
    dir.write_csv("correlations.csv", &corr)?;
    let series = birkhoff(&cfg.matrix, &cfg.birkhoff, seed)?;
    dir.write_csv("birkhoff.csv", &series)?;
    let stage = support_stage(&cfg.support, &cfg.matrix, config)?;
    let support = nu_support_evidence(&stage, cfg.support.samples, cfg.support.depth_grid, seed)?;

    let last = *cfg.birkhoff.checkpoints.last().expect("checked above");
    let finals: Vec<&BirkhoffRow> = series.iter().filter(|r| r.n == last).collect();
    let birkhoff_worst = finals.iter().map(|r| r.cos_average.abs()).fold(0.0, f64::max);
    let correlations_zero = corr.iter().all(|c| c.re == 0.0 && c.im == 0.0);
    let birkhoff_ok = birkhoff_worst <= cfg.birkhoff.tolerance;
    let constant_exact = series.iter().all(|r| r.constant_average == 1.0);
    let passed = correlations_zero && birkhoff_ok && constant_exact && support.all_positive;
    let report = MixingReport {
        correlations_zero,
        birkhoff_worst,
        birkhoff_ok,
        constant_exact,
        support,
        passed,
    };
    dir.write_json("report.json", &report)?;
    Ok(Outcome {
        passed: report.passed,
        summary: format!(
            "correlations zero {}, |cos average| {:.2e} at n = {last}, support min cell mass {:.2e}",
            report.correlations_zero, report.birkhoff_worst, report.support.min_cell_mass
        ),
    })
}
