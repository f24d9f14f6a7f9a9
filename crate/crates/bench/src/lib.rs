//! Benchmarks for the `curie-weiss` crate live in `benches/`; run them with `cargo bench -p curie-weiss-bench`.
