//! Criterion benchmarks for the evaluation engine; see `benches/`.
