//! Criterion benchmarks for `carpet-core`; see `benches/`.
