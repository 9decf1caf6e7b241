//! Criterion benchmarks for the propagation, sampling and collapse kernels.
//! Run with `cargo bench -p dowsim-bench`.
