//! Criterion benchmarks for the solver; see `benches/operators.rs`.
