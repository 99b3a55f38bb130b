//! Criterion benchmarks for vmc-core; see `benches/`.
