//! Criterion benchmarks for the static analyses; see `benches/`.
