//! Criterion benchmarks for the completion engine live under `benches/`.
