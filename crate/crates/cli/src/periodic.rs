use std::path::Path;

use anyhow::{Context, Result};
use carpet_core::toral::{lefschetz_count, periodic_orbits, periodic_points, ToralAutomorphism};
use serde::{Deserialize, Serialize};

use crate::run::RunDir;
use crate::Outcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeriodicConfig {
    pub matrix: ToralAutomorphism,
    pub max_period: i64,
    /// Also write every orbit of exact period `n` to `orbits.csv`.
    pub list_orbits: bool,
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        Self {
            matrix: ToralAutomorphism::cat_map(),
            max_period: 8,
            list_orbits: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountRow {
    pub period: i64,
    /// Points with `A^n x = x`, from the lattice solve.
    pub fixed_points: usize,
    /// `|det(A^n - I)|` from the eigenvalues.
    pub lefschetz: i128,
    pub agree: bool,
    pub exact_period_points: usize,
    pub orbits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct OrbitRow {
    period: i64,
    orbit: usize,
    index: usize,
    point: String,
}

#[derive(Serialize)]
struct Report<'a> {
    max_period: i64,
    all_agree: bool,
    counts: &'a [CountRow],
}

pub fn counts(cfg: &PeriodicConfig) -> Result<(Vec<CountRow>, Vec<Vec<Vec<String>>>)> {
    if cfg.max_period < 1 {
        anyhow::bail!("field `max_period`: must be at least 1, got {}", cfg.max_period);
    }
    let aut = &cfg.matrix;
    let mut rows = Vec::new();
    let mut listed = Vec::new();
    for n in 1..=cfg.max_period {
        let fixed = periodic_points(aut, n).with_context(|| format!("period {n}"))?;
        let lefschetz = lefschetz_count(aut, n as u32).with_context(|| format!("period {n}"))?;
        let orbits = periodic_orbits(aut, n).with_context(|| format!("period {n}"))?;
        let exact: usize = orbits.iter().map(Vec::len).sum();
        rows.push(CountRow {
            period: n,
            fixed_points: fixed.len(),
            lefschetz,
            agree: fixed.len() as i128 == lefschetz,
            exact_period_points: exact,
            orbits: orbits.len(),
        });
        listed.push(
            orbits
                .iter()
                .map(|o| o.iter().map(|p| p.to_string()).collect())
                .collect(),
        );
    }
    Ok((rows, listed))
}

pub fn run(config: Option<&Path>, seed: u64, out: &Path) -> Result<Outcome> {
    let cfg: PeriodicConfig = crate::config::load(config)?;
    crate::config::check_matrix(&cfg.matrix)?;
    let dir = RunDir::create(out, "periodic", &cfg, seed)?;
    let (rows, listed) = counts(&cfg)?;
    dir.write_csv("counts.csv", &rows)?;
    if cfg.list_orbits {
        let mut orbit_rows = Vec::new();
        for (row, orbits) in rows.iter().zip(&listed) {
            for (k, o) in orbits.iter().enumerate() {
                for (i, p) in o.iter().enumerate() {
                    orbit_rows.push(OrbitRow {
                        period: row.period,
                        orbit: k,
                        index: i,
                        point: p.clone(),
                    });
                }
            }
        }
        dir.write_csv("orbits.csv", &orbit_rows)?;
    }
    let all_agree = rows.iter().all(|r| r.agree);
    dir.write_json(
        "report.json",
        &Report {
            max_period: cfg.max_period,
            all_agree,
            counts: &rows,
        },
    )?;
    let list: Vec<String> = rows.iter().map(|r| r.fixed_points.to_string()).collect();
    Ok(Outcome {
        passed: all_agree,
        summary: format!("fixed points of A^n for n = 1..{}: {}", cfg.max_period, list.join(", ")),
    })
}
