//! Criterion benchmarks for the solver, likelihood and kernel density; see `benches/`.
