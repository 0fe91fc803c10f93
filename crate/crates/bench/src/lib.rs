//! Criterion benchmarks for `sylvester-core`; run with `cargo bench -p sylvester-bench`.
