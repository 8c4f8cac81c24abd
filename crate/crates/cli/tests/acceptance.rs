//! End-to-end acceptance checks. Each test prints one line
//! `criterion N [PASS|FAIL] name: details (time / budget)` and then asserts.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use carpet_cli::spec::{control, saddle_sweep, visits, CarpetConfig, ControlConfig, SaddleSweepConfig};
use carpet_core::blowup::{
    angle_difference, build_stage, carpet_invariants, direction_map, fixed_angles, is_invariant_slope,
    plan_orbits, same_point, CarpetStage, ExtendedPoint, RadiusSchedule,
};
use carpet_core::measure::{
    birkhoff_average, character_correlation, lp_distance, lp_oracle_matrix, nu_support_evidence, DiscreteMeasure,
};
use carpet_core::rng::stream_rng;
use carpet_core::space::{DyadicTorusMap, TorusSpace};
use carpet_core::specification::{contradiction_experiment, ContradictionParams, LocalSaddle, Regions};
use carpet_core::sphere::{factor_apply, project};
use carpet_core::toral::{
    lefschetz_count, periodic_points, surd, RationalTorusPoint, ToralAutomorphism, TorusPoint,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn verdict(n: u32, name: &str, ok: bool, details: &str, start: Instant, budget: Duration) {
    let t = start.elapsed();
    let tag = if ok && t <= budget { "PASS" } else { "FAIL" };
    println!(
        "criterion {n} [{tag}] {name}: {details} ({:.2} s / {} s)",
        t.as_secs_f64(),
        budget.as_secs()
    );
    assert!(ok, "criterion {n} failed: {details}");
    assert!(t <= budget, "criterion {n} over budget: {t:?}");
}

fn cat() -> ToralAutomorphism {
    ToralAutomorphism::cat_map()
}

#[test]
fn criterion_01_periodic_counts() {
    let start = Instant::now();
    let expected: [usize; 12] = [1, 5, 16, 45, 121, 320, 841, 2205, 5776, 15125, 39601, 103680];
    let a = cat();
    let mut ok = true;
    for (i, &e) in expected.iter().enumerate() {
        let n = i as i64 + 1;
        let lattice = periodic_points(&a, n).unwrap();
        let lefschetz = lefschetz_count(&a, n as u32).unwrap();
        let trace = (a.power(n).unwrap().matrix().trace() - 2).abs();
        ok &= lattice.len() == e && lefschetz == e as i128 && trace == e as i128;
        if n <= 6 {
            // every fixed point of A^n has denominator dividing det(A^n - I)
            let an = a.power(n).unwrap();
            let q = an.matrix().sub_identity().unwrap().det().abs();
            let mut grid = Vec::new();
            for i in 0..q {
                for j in 0..q {
                    let p = RationalTorusPoint::from_fractions(i, q, j, q).unwrap();
                    if an.apply(&p) == p {
                        grid.push(p);
                    }
                }
            }
            grid.sort();
            ok &= grid == lattice;
        }
    }
    verdict(1, "periodic counts", ok, "n = 1..12 two ways, grid oracle n <= 6", start, Duration::from_secs(10));
}

/// Mixed sample: uniform regular points, points in collars, boundary points.
fn mixed_sample(stage: &CarpetStage, rng: &mut ChaCha8Rng, n: usize) -> Vec<ExtendedPoint> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let pick = rng.random_range(0..3);
        let p = if pick == 0 {
            ExtendedPoint::regular(TorusPoint::new(rng.random(), rng.random()))
        } else {
            let k = rng.random_range(0..stage.depth());
            let o = &stage.blown()[k];
            let i = rng.random_range(0..o.period());
            let angle = rng.random_range(0.0..TAU);
            if pick == 1 {
                ExtendedPoint::Boundary { orbit: k, index: i, angle }
            } else {
                let r = o.radius * rng.random_range(1.0..2.5);
                ExtendedPoint::regular(o.lift(i).translate([r * angle.cos(), r * angle.sin()]))
            }
        };
        if let Ok(p) = stage.normalize(&p) {
            out.push(p);
        }
    }
    out
}

#[test]
fn criterion_02_semiconjugacy() {
    let start = Instant::now();
    let a = cat();
    let mut rng = stream_rng(2, 0);
    let mut exact_ok = true;
    for _ in 0..10_000 {
        let q = rng.random_range(1..2000i128);
        let p = RationalTorusPoint::from_fractions(
            rng.random_range(-5000..5000),
            q,
            rng.random_range(-5000..5000),
            rng.random_range(1..2000),
        )
        .unwrap();
        exact_ok &= factor_apply(&a, &project(&p)) == project(&a.apply(&p));
    }
    let top = build_stage(&plan_orbits(&a, 8).unwrap(), 6, &RadiusSchedule::default()).unwrap();
    let mut worst: f64 = 0.0;
    let mut tower_ok = true;
    for n in 1..=5 {
        let (upper, lower) = (top.truncate(n + 1), top.truncate(n));
        for p in mixed_sample(&upper, &mut rng, 2000) {
            let lhs = upper.project_down(&upper.apply(&p).unwrap()).unwrap();
            let rhs = lower.apply(&upper.project_down(&p).unwrap()).unwrap();
            tower_ok &= same_point(&lhs, &rhs, 1e-9);
            worst = worst.max(lower.distance(&lhs, &rhs));
        }
    }
    let details = format!("10^4 rationals exact {exact_ok}, 10^4 stage points worst {worst:.1e}");
    verdict(2, "semiconjugacy", exact_ok && tower_ok, &details, start, Duration::from_secs(30));
}

#[test]
fn criterion_03_carpet_conditions() {
    let start = Instant::now();
    let stage = build_stage(&plan_orbits(&cat(), 10).unwrap(), 50, &RadiusSchedule::default()).unwrap();
    let r = carpet_invariants(&stage, 256, 1.0 / 16.0, &[5, 10, 20, 50]);
    let r0 = stage.schedule().r0;
    // independent look at the envelope, k counted from 1
    let envelope = stage.blown().iter().enumerate().all(|(k, o)| o.radius <= r0 * 0.5f64.powi(k as i32 + 1));
    let fractions: Vec<String> = r.s3.points.iter().map(|p| format!("{:.3}", p.fraction)).collect();
    let ok = r.s1.discs_disjoint
        && r.s1.avoids_branch_set
        && r.s2.non_increasing
        && r.s2.within_envelope
        && envelope
        && r.s3.strictly_increasing
        && r.s3.points.len() == 4;
    let details = format!(
        "{} pairs disjoint {}, radii ok {}, density {}",
        r.s1.pairs_checked,
        r.s1.discs_disjoint,
        r.s2.non_increasing && envelope,
        fractions.join(" < ")
    );
    verdict(3, "carpet conditions at depth 50", ok, &details, start, Duration::from_secs(120));
}

#[test]
fn criterion_04_direction_dynamics() {
    let start = Instant::now();
    let a = cat();
    let e = a.eigen().unwrap();
    let lu2 = e.lambda_u * e.lambda_u;
    let unstable = surd(-1, 2, 1, 2, 5);
    let companion = surd(-1, 2, -1, 2, 5);
    let mut ok = is_invariant_slope(&a, &unstable).unwrap() && is_invariant_slope(&a, &companion).unwrap();
    // perpendicular: the product of the slopes is exactly -1
    let product = unstable.checked_mul(&companion).unwrap();
    ok &= product.is_rational() && product.to_f64() == -1.0;
    let fixed = fixed_angles(&a, 720);
    ok &= fixed.len() == 4;
    let mut repelling = 0;
    let mut worst_fd: f64 = 0.0;
    for f in &fixed {
        ok &= angle_difference(direction_map(&a, f.angle), f.angle).abs() < 1e-12;
        let on_u = (f.angle.tan() - unstable.to_f64()).abs() < 1e-9;
        let on_s = (f.angle.tan() - companion.to_f64()).abs() < 1e-9;
        ok &= on_u ^ on_s;
        if on_s {
            repelling += 1;
            let h = 1e-6;
            let fd = angle_difference(direction_map(&a, f.angle + h), direction_map(&a, f.angle - h)) / (2.0 * h);
            worst_fd = worst_fd.max((fd - lu2).abs());
        }
    }
    ok &= repelling == 2 && worst_fd <= 1e-6;
    let angles: Vec<String> = fixed.iter().map(|f| format!("{:.4}", f.angle / PI)).collect();
    let details = format!("fixed angles {} pi, |fd - lambda_u^2| {worst_fd:.1e}", angles.join(", "));
    verdict(4, "direction dynamics", ok, &details, start, Duration::from_secs(10));
}

fn random_measure(rng: &mut ChaCha8Rng, max_atoms: usize) -> DiscreteMeasure<TorusPoint> {
    let n = rng.random_range(1..=max_atoms);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let atoms = (0..n)
        .map(|i| {
            // coarse grid half of the time, so that distances tie
            let p = if rng.random_bool(0.5) {
                TorusPoint::new(rng.random_range(0..8) as f64 / 8.0, rng.random_range(0..8) as f64 / 8.0)
            } else {
                TorusPoint::new(rng.random(), rng.random())
            };
            (p, raw[i] / total)
        })
        .collect();
    DiscreteMeasure::new(&TorusSpace, atoms).unwrap()
}

#[test]
fn criterion_05_levy_prokhorov() {
    let start = Instant::now();
    let mut rng = stream_rng(5, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (mu, nu) = (random_measure(&mut rng, 8), random_measure(&mut rng, 8));
        let a: Vec<f64> = mu.atoms().iter().map(|x| x.1).collect();
        let b: Vec<f64> = nu.atoms().iter().map(|x| x.1).collect();
        let d: Vec<Vec<f64>> = mu
            .atoms()
            .iter()
            .map(|(p, _)| nu.atoms().iter().map(|(q, _)| p.torus_distance(q)).collect())
            .collect();
        let got = lp_distance(&TorusSpace, &mu, &nu).unwrap();
        worst = worst.max((got - lp_oracle_matrix(&a, &b, &d)).abs());
    }
    let mut axioms = true;
    for _ in 0..500 {
        let m: Vec<_> = (0..3).map(|_| random_measure(&mut rng, 8)).collect();
        let d = |i: usize, j: usize| lp_distance(&TorusSpace, &m[i], &m[j]).unwrap();
        let (ab, ba, bc, ac) = (d(0, 1), d(1, 0), d(1, 2), d(0, 2));
        axioms &= (ab - ba).abs() <= 2e-9 && ac <= ab + bc + 2e-9 && d(0, 0) == 0.0;
        axioms &= m[0] == m[1] || ab > 0.0;
    }
    let details = format!("200 instances worst {worst:.1e}, 500 triples axioms {axioms}");
    verdict(5, "Levy-Prokhorov solver", worst <= 2e-9 && axioms, &details, start, Duration::from_secs(60));
}

#[test]
fn criterion_06_mixing_evidence() {
    let start = Instant::now();
    let a = cat();
    let k = [1i128, 0];
    let mut zero = true;
    // oracle: the integer orbit of k under the transpose
    let mut image = k;
    let m = a.matrix();
    for n in 1..=30u32 {
        image = [m.a * image[0] + m.c * image[1], m.b * image[0] + m.d * image[1]];
        let c = character_correlation(&a, k, k, n).unwrap();
        zero &= c.re == 0.0 && c.im == 0.0 && image != k;
    }
    let map = DyadicTorusMap::new(&a);
    let mut rng = stream_rng(6, 0);
    let x0 = DyadicTorusMap::from_unit(rng.random(), rng.random());
    let avg = birkhoff_average(&map, |p| (TAU * DyadicTorusMap::to_torus(*p).x).cos(), &x0, 1_000_000).unwrap();
    let stage = build_stage(&plan_orbits(&a, 8).unwrap(), 10, &RadiusSchedule::default()).unwrap();
    let support = nu_support_evidence(&stage, 100_000, 3, 6).unwrap();
    let ok = zero && avg.abs() <= 5e-3 && support.all_positive && support.grid == 8;
    let details = format!(
        "correlations zero {zero}, Birkhoff {avg:.1e}, 8x8 min cell mass {:.2e} (seed 6)",
        support.min_cell_mass
    );
    verdict(6, "mixing evidence", ok, &details, start, Duration::from_secs(60));
}

#[test]
fn criterion_07_dense_periodic_points() {
    let start = Instant::now();
    let plan = plan_orbits(&cat(), 12).unwrap();
    let g = 16usize;
    let mut hit = vec![false; g * g];
    let mut points = 0;
    for o in plan.spared() {
        for p in &o.points {
            let f = p.rep().to_f64();
            // canonical representatives live in the half-domain [0, 1/2] x [0, 1)
            let i = ((2.0 * f.x * g as f64) as usize).min(g - 1);
            let j = ((f.y * g as f64) as usize).min(g - 1);
            hit[j * g + i] = true;
            points += 1;
        }
    }
    let empty = hit.iter().filter(|h| !**h).count();
    let details = format!("{points} spared points, {empty} empty cells of 16x16");
    verdict(7, "dense periodic points", empty == 0, &details, start, Duration::from_secs(120));
}

#[test]
fn criterion_08_saddle_lemma() {
    let start = Instant::now();
    let s = saddle_sweep(&SaddleSweepConfig::default(), 8).unwrap();
    let ok = s.draws == 10_000 && s.bound_ok == s.draws && s.worked_m == 3 && s.worked_bound_ok;
    let details = format!("{}/{} bound_ok, worked instance m = {}", s.bound_ok, s.draws, s.worked_m);
    verdict(8, "saddle lemma", ok, &details, start, Duration::from_secs(30));
}

#[test]
fn criterion_09_specification_evidence() {
    let start = Instant::now();
    let a = cat();
    let ctl = ControlConfig {
        epsilons: vec![0.1],
        ..ControlConfig::default()
    };
    let rows = control(&a, &ctl, 9).unwrap();
    let found = rows.iter().filter(|r| r.found).count();

    let stage = build_stage(&plan_orbits(&a, 6).unwrap(), 1, &RadiusSchedule::default()).unwrap();
    let saddle = LocalSaddle::new(&stage, 0).unwrap();
    let carpet = CarpetConfig {
        long_run: 0,
        ..CarpetConfig::default()
    };
    let u = ExtendedPoint::regular(TorusPoint::new(carpet.u[0], carpet.u[1]));
    let regions = Regions::standard(&saddle, u.clone(), carpet.w_radius);
    let (_, v) = visits(&stage, &saddle, &regions, &carpet, 9).unwrap();
    let c = contradiction_experiment(&stage, &saddle, &u, &ContradictionParams::default()).unwrap();

    let ok = found == rows.len()
        && v.seeds == 1000
        && v.worst_fraction <= 0.55
        && v.passage_violations == 0
        && c.violations == 0
        && c.chain_failures == 0;
    let details = format!(
        "control {found}/{} at eps 0.1, worst U-fraction {:.3} over {} seeds, best nu(U) with nu(W) > 0 {:.4}, margin {:.3}",
        rows.len(),
        v.worst_fraction,
        v.seeds,
        c.best_u_with_w,
        c.margin
    );
    verdict(9, "specification failure evidence", ok, &details, start, Duration::from_secs(300));
}

fn digests(dir: &Path) -> BTreeMap<String, String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            let d = Sha256::digest(fs::read(e.path()).unwrap());
            let hex: String = d.iter().map(|b| format!("{b:02x}")).collect();
            (e.file_name().to_string_lossy().into_owned(), hex)
        })
        .collect()
}

#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let tmp = tempfile::TempDir::new().unwrap();
    let configs = [
        ("periodic", r#"{"max_period": 8}"#),
        ("build", r#"{"depth": 10, "max_period": 8}"#),
        ("render", r#"{"stage": "build-0/stage.json", "size": 512, "trajectories": 5}"#),
        ("mixing", r#"{"birkhoff": {"starts": 2, "checkpoints": [1000, 100000]}}"#),
        (
            "spec",
            r#"{"control": {"instances": 10}, "carpet": {"seeds": 50, "long_run": 10000},
                "contradiction": {"seeds": 100}}"#,
        ),
    ];
    let mut ok = true;
    let mut files = 0;
    for (cmd, text) in configs {
        let cfg = tmp.path().join(format!("{cmd}.json"));
        fs::write(&cfg, text).unwrap();
        let mut runs = Vec::new();
        for r in 0..2 {
            let out = tmp.path().join(format!("{cmd}-{r}"));
            let run = Command::new(env!("CARGO_BIN_EXE_carpet"))
                .args([cmd, "--config", cfg.to_str().unwrap(), "--seed", "42", "--out", out.to_str().unwrap()])
                .output()
                .unwrap();
            ok &= run.status.success();
            runs.push(digests(&out));
        }
        ok &= !runs[0].is_empty() && runs[0] == runs[1];
        files += runs[0].len();
    }
    let details = format!("5 commands run twice, {files} files compared by SHA-256");
    verdict(10, "determinism", ok, &details, start, Duration::from_secs(120));
}
