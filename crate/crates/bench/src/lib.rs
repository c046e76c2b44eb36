//! Criterion benchmarks for assembly, the state solve, the Allen–Cahn step
//! and a full outer iteration. Run with `cargo bench -p flowshape-bench`.
