//! Criterion benchmarks for the pointer computations live in `benches/`.
