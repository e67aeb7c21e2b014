//! Criterion benchmarks for the reconstruction operators live in `benches/`.
