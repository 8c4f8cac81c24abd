use std::hint::black_box;

use carpet_core::blowup::{build_stage, carpet_invariants, plan_orbits, ExtendedPoint, RadiusSchedule};
use carpet_core::measure::{birkhoff_average, lp_distance, DiscreteMeasure};
use carpet_core::rng::stream_rng;
use carpet_core::space::{DyadicTorusMap, TorusMap, TorusSpace};
use carpet_core::specification::{
    expansion_gap, saddle_exit_time, trace_search, SaddleModel, Segment, SpecInstance,
};
use carpet_core::toral::{periodic_points, ToralAutomorphism, TorusPoint};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;

fn toral(c: &mut Criterion) {
    let cat = ToralAutomorphism::cat_map();
    c.bench_function("periodic_points n=10", |b| b.iter(|| periodic_points(black_box(&cat), 10).unwrap()));
    c.bench_function("plan_orbits max_period=10", |b| b.iter(|| plan_orbits(black_box(&cat), 10).unwrap()));
}

fn stages(c: &mut Criterion) {
    let plan = plan_orbits(&ToralAutomorphism::cat_map(), 10).unwrap();
    c.bench_function("build_stage depth=20", |b| {
        b.iter(|| build_stage(black_box(&plan), 20, &RadiusSchedule::default()).unwrap())
    });
    let stage = build_stage(&plan, 20, &RadiusSchedule::default()).unwrap();
    let mut rng = stream_rng(1, 0);
    let pts: Vec<ExtendedPoint> = (0..1000)
        .map(|_| stage.uncollapse(&carpet_core::sphere::project(&TorusPoint::new(rng.random(), rng.random()))))
        .collect();
    c.bench_function("stage apply x1000 depth=20", |b| {
        b.iter(|| pts.iter().map(|p| stage.apply(p).unwrap()).count())
    });
    let mut g = c.benchmark_group("invariants");
    g.sample_size(10);
    g.bench_function("carpet_invariants depth=20 grid=128", |b| {
        b.iter(|| carpet_invariants(black_box(&stage), 128, 1.0 / 16.0, &[5, 10, 20]))
    });
    g.finish();
}

fn measures(c: &mut Criterion) {
    let mut rng = stream_rng(2, 0);
    let mut measure = |n: usize| {
        let atoms = (0..n)
            .map(|_| (TorusPoint::new(rng.random(), rng.random()), 1.0 / n as f64))
            .collect();
        DiscreteMeasure::new(&TorusSpace, atoms).unwrap()
    };
    let (a8, b8) = (measure(8), measure(8));
    let (a64, b64) = (measure(64), measure(64));
    c.bench_function("lp_distance 8x8", |b| b.iter(|| lp_distance(&TorusSpace, &a8, &b8).unwrap()));
    c.bench_function("lp_distance 64x64", |b| b.iter(|| lp_distance(&TorusSpace, &a64, &b64).unwrap()));
    let map = DyadicTorusMap::new(&ToralAutomorphism::cat_map());
    let x = DyadicTorusMap::from_unit(0.3, 0.7);
    c.bench_function("birkhoff dyadic n=1e5", |b| {
        b.iter(|| {
            birkhoff_average(&map, |p| (std::f64::consts::TAU * DyadicTorusMap::to_torus(*p).x).cos(), &x, 100_000)
                .unwrap()
        })
    });
}

fn specification(c: &mut Criterion) {
    let model = SaddleModel::new(0.5, 2.0, 0.08).unwrap();
    c.bench_function("saddle_exit_time", |b| {
        b.iter(|| saddle_exit_time(&model, black_box(0.08), black_box(1e-7)).unwrap())
    });
    let cat = ToralAutomorphism::cat_map();
    let gap = expansion_gap(cat.eigen().unwrap().lambda_u, 0.1);
    let inst = SpecInstance::new(
        0.1,
        gap,
        vec![
            Segment { base: TorusPoint::new(0.1, 0.2), start: 0, end: 2 },
            Segment { base: TorusPoint::new(0.7, 0.4), start: 2 + gap, end: 4 + gap },
        ],
    )
    .unwrap();
    let system = TorusMap::new(cat);
    let mut g = c.benchmark_group("tracing");
    g.sample_size(10);
    g.bench_function("trace_search grid=128", |b| b.iter(|| trace_search(&system, &inst, 128).unwrap()));
    g.finish();
}

criterion_group!(benches, toral, stages, measures, specification);
criterion_main!(benches);
