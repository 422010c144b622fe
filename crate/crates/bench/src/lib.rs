//! Benchmarks live in `benches/`. Run with `cargo bench -p unifi-bench`.
