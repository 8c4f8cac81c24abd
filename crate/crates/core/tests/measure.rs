use std::f64::consts::PI;

use carpet_core::blowup::{build_stage, plan_orbits, RadiusSchedule};
use carpet_core::measure::{
    birkhoff_average, birkhoff_average_exact, character_correlation, empirical_measure,
    lp_distance, lp_distance_matrix, lp_oracle_matrix, nu_support_evidence,
    periodic_orbit_average, DiscreteMeasure, NeumaierSum,
};
use carpet_core::rng::stream_rng;
use carpet_core::space::{
    DyadicSpace, DyadicTorusMap, DynamicalSystem, MetricSpace, SphereSpace, TorusSpace,
};
use carpet_core::sphere::project;
use carpet_core::toral::{RationalTorusPoint, ToralAutomorphism, TorusPoint};
use carpet_core::Error;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// Points on a coarse grid some of the time, so that distances tie.
fn random_point(rng: &mut ChaCha8Rng) -> TorusPoint {
    if rng.random_bool(0.5) {
        TorusPoint::new(rng.random_range(0..8) as f64 / 8.0, rng.random_range(0..8) as f64 / 8.0)
    } else {
        TorusPoint::new(rng.random(), rng.random())
    }
}

fn random_measure(rng: &mut ChaCha8Rng, max_atoms: usize) -> DiscreteMeasure<TorusPoint> {
    let n = rng.random_range(1..=max_atoms);
    let pts: Vec<_> = (0..n).map(|_| random_point(rng)).collect();
    let w = random_weights(rng, n);
    DiscreteMeasure::new(&TorusSpace, pts.into_iter().zip(w).collect()).unwrap()
}

fn oracle(mu: &DiscreteMeasure<TorusPoint>, nu: &DiscreteMeasure<TorusPoint>) -> f64 {
    let a: Vec<f64> = mu.atoms().iter().map(|x| x.1).collect();
    let b: Vec<f64> = nu.atoms().iter().map(|x| x.1).collect();
    let d: Vec<Vec<f64>> = mu
        .atoms()
        .iter()
        .map(|(p, _)| nu.atoms().iter().map(|(q, _)| p.torus_distance(q)).collect())
        .collect();
    lp_oracle_matrix(&a, &b, &d)
}

#[test]
fn lp_matches_subset_enumeration() {
    let mut rng = stream_rng(2024, 0);
    for case in 0..200 {
        let mu = random_measure(&mut rng, 8);
        let nu = random_measure(&mut rng, 8);
        let got = lp_distance(&TorusSpace, &mu, &nu).unwrap();
        let want = oracle(&mu, &nu);
        assert!((got - want).abs() <= 2e-9, "case {case}: {got} vs {want}");
    }
}

#[test]
fn lp_on_abstract_distance_matrices() {
    // distances above 1 and exact ties
    let mut rng = stream_rng(7, 3);
    for _ in 0..200 {
        let (n, m) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let a = random_weights(&mut rng, n);
        let b = random_weights(&mut rng, m);
        let d: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0..12) as f64 / 8.0).collect())
            .collect();
        let got = lp_distance_matrix(&a, &b, &d);
        let want = lp_oracle_matrix(&a, &b, &d);
        assert!((got - want).abs() <= 2e-9, "{got} vs {want}");
    }
}

#[test]
fn lp_of_diracs_is_capped_distance() {
    let mut rng = stream_rng(11, 0);
    for _ in 0..100 {
        let (x, y) = (random_point(&mut rng), random_point(&mut rng));
        let mu = DiscreteMeasure::dirac(&TorusSpace, x);
        let nu = DiscreteMeasure::dirac(&TorusSpace, y);
        assert_eq!(lp_distance(&TorusSpace, &mu, &nu).unwrap(), x.torus_distance(&y).min(1.0));
        assert_eq!(lp_distance(&TorusSpace, &mu, &mu).unwrap(), 0.0);
    }
}

#[test]
fn lp_metric_axioms() {
    let mut rng = stream_rng(99, 0);
    for _ in 0..500 {
        let m: Vec<_> = (0..3).map(|_| random_measure(&mut rng, 10)).collect();
        let d = |i: usize, j: usize| lp_distance(&TorusSpace, &m[i], &m[j]).unwrap();
        let (ab, ba, bc, ac) = (d(0, 1), d(1, 0), d(1, 2), d(0, 2));
        assert!((ab - ba).abs() <= 2e-9, "symmetry {ab} {ba}");
        assert!(ac <= ab + bc + 2e-9, "triangle {ac} > {ab} + {bc}");
        assert_eq!(d(0, 0), 0.0);
        if m[0] != m[1] {
            assert!(ab > 0.0);
        }
    }
}

#[test]
fn lp_rejects_mixed_spaces() {
    let t = DiscreteMeasure::dirac(&TorusSpace, TorusPoint::new(0.1, 0.1));
    let s = DiscreteMeasure::dirac(&SphereSpace, project(&TorusPoint::new(0.1, 0.1)));
    // same point type, different declared space
    let s_as_torus: DiscreteMeasure<TorusPoint> =
        serde_json::from_value(serde_json::json!({"kind": {"kind": "sphere"}, "atoms": [[{"x": 0.1, "y": 0.1}, 1.0]]}))
            .unwrap();
    assert!(matches!(
        lp_distance(&TorusSpace, &t, &s_as_torus),
        Err(Error::SpaceMismatch(..))
    ));
    assert_eq!(lp_distance(&SphereSpace, &s, &s).unwrap(), 0.0);
}

/// Cell-centre measure of an `k x k` grid on the torus.
fn grid_measure(k: usize) -> DiscreteMeasure<[u64; 2]> {
    let w = 1.0 / (k * k) as f64;
    let atoms = (0..k * k)
        .map(|c| {
            let (i, j) = (c % k, c / k);
            let p = DyadicTorusMap::from_unit((i as f64 + 0.5) / k as f64, (j as f64 + 0.5) / k as f64);
            (p, w)
        })
        .collect();
    DiscreteMeasure::new(&DyadicSpace, atoms).unwrap()
}

#[test]
fn empirical_measures_approach_lebesgue() {
    let cat = DyadicTorusMap::new(&ToralAutomorphism::cat_map());
    let grid = grid_measure(16);
    for seed in 0..3 {
        let mut rng = stream_rng(500 + seed, 0);
        let start = DyadicTorusMap::from_unit(rng.random(), rng.random());
        let orbit = cat.orbit(&start, 100_000).unwrap();
        let rho: Vec<f64> = [100, 1_000, 10_000, 100_000]
            .iter()
            .map(|&n| {
                let emp = empirical_measure(&DyadicSpace, &orbit[..n]).unwrap();
                lp_distance(&DyadicSpace, &emp, &grid).unwrap()
            })
            .collect();
        assert!(rho.windows(2).all(|w| w[1] < w[0]), "seed {seed}: {rho:?}");
    }
}

#[test]
fn birkhoff_cosine_vanishes() {
    // oracle: midpoint quadrature of cos(2 pi x) on a 512 grid
    let mut q = NeumaierSum::default();
    for i in 0..512 {
        q.add((2.0 * PI * (i as f64 + 0.5) / 512.0).cos());
    }
    let integral = q.total() / 512.0;
    assert!(integral.abs() < 1e-12);

    let cat = DyadicTorusMap::new(&ToralAutomorphism::cat_map());
    for seed in 0..4 {
        let mut rng = stream_rng(seed, 0);
        let x = DyadicTorusMap::from_unit(rng.random(), rng.random());
        let f = |p: &[u64; 2]| (2.0 * PI * DyadicTorusMap::to_torus(*p).x).cos();
        let avg = birkhoff_average(&cat, f, &x, 1_000_000).unwrap();
        assert!((avg - integral).abs() < 5e-3, "seed {seed}: {avg}");
    }
}

#[test]
fn birkhoff_disc_indicator_matches_area() {
    let cat = DyadicTorusMap::new(&ToralAutomorphism::cat_map());
    let centre = TorusPoint::new(0.3, 0.6);
    let r = 0.2;
    let mut rng = stream_rng(42, 0);
    let x = DyadicTorusMap::from_unit(rng.random(), rng.random());
    let f = |p: &[u64; 2]| f64::from(u8::from(DyadicTorusMap::to_torus(*p).torus_distance(&centre) < r));
    let avg = birkhoff_average(&cat, f, &x, 1_000_000).unwrap();
    assert!((avg - PI * r * r).abs() < 1e-2, "{avg}");
}

#[test]
fn birkhoff_on_periodic_orbits_is_the_orbit_average() {
    let cat = ToralAutomorphism::cat_map();
    let f = |p: &RationalTorusPoint| *p.x() * Ratio::new(3, 1) - *p.y() * *p.x();
    for s in ["1/5,2/5", "1/4,0", "3/11,7/11", "2/7,5/7"] {
        let p: RationalTorusPoint = s.parse().unwrap();
        let period = carpet_core::toral::exact_period(&cat, &p);
        let avg = periodic_orbit_average(&cat, f, &p);
        for k in 1..4 {
            assert_eq!(birkhoff_average_exact(&cat, f, &p, k * period).unwrap(), avg);
        }
    }
}

#[test]
fn character_correlation_matches_quadrature() {
    // on the grid (i, j)/512 the automorphism permutes points, so the Riemann
    // sum of the product of characters is exact up to rounding
    let cat = ToralAutomorphism::cat_map();
    let n_grid = 512usize;
    let ks = [[1i128, 0], [0, 1], [1, 1], [2, -1]];
    for n in 0..=5u32 {
        let an = cat.power(n as i64).unwrap();
        for k in ks {
            for l in ks.iter().copied().chain([carpet_core::measure::transpose_power_apply(&cat, k, n).unwrap()]) {
                let exact = character_correlation(&cat, k, l, n).unwrap();
                assert!(exact.re == 0.0 || exact.re == 1.0);
                assert_eq!(exact.im, 0.0);
                let (mut re, mut im) = (NeumaierSum::default(), NeumaierSum::default());
                for i in 0..n_grid {
                    for j in 0..n_grid {
                        let x = TorusPoint::new(i as f64 / n_grid as f64, j as f64 / n_grid as f64);
                        let y = an.apply_f64(&x);
                        let phase = 2.0
                            * PI
                            * ((k[0] as f64 * y.x + k[1] as f64 * y.y)
                                - (l[0] as f64 * x.x + l[1] as f64 * x.y));
                        re.add(phase.cos());
                        im.add(phase.sin());
                    }
                }
                let area = (n_grid * n_grid) as f64;
                let (qre, qim) = (re.total() / area, im.total() / area);
                assert!(
                    (qre - exact.re).abs() < 1e-6 && qim.abs() < 1e-6,
                    "n {n} k {k:?} l {l:?}: {qre} {qim} vs {exact}"
                );
            }
        }
    }
}

#[test]
fn nu_support_mesh_is_charged() {
    let plan = plan_orbits(&ToralAutomorphism::cat_map(), 8).unwrap();
    for depth in [0, 1, 3, 6] {
        let stage = build_stage(&plan, depth, &RadiusSchedule::default()).unwrap();
        let report = nu_support_evidence(&stage, 100_000, 3, 2024).unwrap();
        assert!(report.all_positive, "depth {depth}: {:?}", report.counts);
        assert_eq!(report.regular_mass, 1.0);
        assert_eq!(report.counts.iter().sum::<u64>(), 100_000);
        assert_eq!(report, nu_support_evidence(&stage, 100_000, 3, 2024).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lp_is_bounded_and_symmetric(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let mu = random_measure(&mut rng, 6);
        let nu = random_measure(&mut rng, 6);
        let ab = lp_distance(&TorusSpace, &mu, &nu).unwrap();
        let ba = lp_distance(&TorusSpace, &nu, &mu).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() <= 2e-9);
    }

    #[test]
    fn lp_of_a_shifted_measure_is_at_most_the_shift(seed in any::<u64>(), dx in -0.2f64..0.2) {
        let mut rng = stream_rng(seed, 1);
        let mu = random_measure(&mut rng, 8);
        let shifted = DiscreteMeasure::new(
            &TorusSpace,
            mu.atoms().iter().map(|(p, w)| (p.translate([dx, 0.0]), *w)).collect(),
        ).unwrap();
        let d = lp_distance(&TorusSpace, &mu, &shifted).unwrap();
        prop_assert!(d <= dx.abs() + 1e-12);
    }
}

#[test]
fn torus_space_metric_spot_check() {
    let mut rng = stream_rng(5, 0);
    let s = TorusSpace;
    for _ in 0..1000 {
        let (a, b, c) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        assert_eq!(s.distance(&a, &a), 0.0);
        assert!((s.distance(&a, &b) - s.distance(&b, &a)).abs() < 1e-15);
        assert!(s.distance(&a, &c) <= s.distance(&a, &b) + s.distance(&b, &c) + 1e-15);
    }
}
