//! Criterion benchmarks for the swing pipeline live in `benches/`.
