//! Criterion benchmarks for the numerical kernels in `quotascan-core`.
//!
//! Run with `cargo bench -p quotascan-bench`.
