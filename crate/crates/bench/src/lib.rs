//! Criterion benchmarks for the estimators, prox steps, kernels and solvers;
//! see `benches/saddle.rs`.
