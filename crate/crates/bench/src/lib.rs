//! Benchmark-only crate. The measurements live in `benches/networks.rs`;
//! run them with `cargo bench -p snn-dbscan-bench`.
