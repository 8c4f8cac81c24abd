use std::path::Path;

use anyhow::Result;
use carpet_core::blowup::{build_stage, carpet_invariants, plan_orbits, RadiusSchedule};
use carpet_core::toral::ToralAutomorphism;
use serde::{Deserialize, Serialize};

use crate::run::RunDir;
use crate::Outcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildConfig {
    pub matrix: ToralAutomorphism,
    pub max_period: i64,
    pub depth: usize,
    pub schedule: RadiusSchedule,
    /// Torus mesh for the density proxy and the connectivity check.
    pub grid: usize,
    pub delta: f64,
    /// Depths at which the density proxy is reported; those beyond `depth`
    /// are dropped.
    pub density_depths: Vec<usize>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            matrix: ToralAutomorphism::cat_map(),
            max_period: 10,
            depth: 10,
            schedule: RadiusSchedule::default(),
            grid: 256,
            delta: 1.0 / 16.0,
            density_depths: vec![5, 10, 20, 50],
        }
    }
}

#[derive(Serialize)]
struct RadiusRow {
    orbit: usize,
    period: usize,
    radius: f64,
    envelope: f64,
}

pub fn run(config: Option<&Path>, seed: u64, out: &Path) -> Result<Outcome> {
    let cfg: BuildConfig = crate::config::load(config)?;
    crate::config::check_matrix(&cfg.matrix)?;
    if !(cfg.delta > 0.0) {
        anyhow::bail!("field `delta`: must be positive, got {}", cfg.delta);
    }
    let dir = RunDir::create(out, "build", &cfg, seed)?;
    let plan = plan_orbits(&cfg.matrix, cfg.max_period)?;
    let stage = build_stage(&plan, cfg.depth, &cfg.schedule)?;
    dir.write("stage.json", (stage.to_json() + "\n").as_bytes())?;
    let report = carpet_invariants(&stage, cfg.grid, cfg.delta, &cfg.density_depths);
    dir.write_json("invariants.json", &report)?;
    let radii: Vec<RadiusRow> = stage
        .blown()
        .iter()
        .enumerate()
        .map(|(k, o)| RadiusRow {
            orbit: k,
            period: o.period(),
            radius: o.radius,
            envelope: cfg.schedule.envelope(k + 1),
        })
        .collect();
    dir.write_csv("radii.csv", &radii)?;
    dir.write_csv("density.csv", &report.s3.points)?;
    let last = report.s3.points.last().map_or(0.0, |p| p.fraction);
    Ok(Outcome {
        passed: report.passed,
        summary: format!(
            "depth {}: disjoint {}, radii non-increasing {}, density {:.3}, connected {}",
            stage.depth(),
            report.s1.discs_disjoint,
            report.s2.non_increasing,
            last,
            report.complement_connected
        ),
    })
}
