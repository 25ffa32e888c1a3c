//! Benchmark crate; see `benches/hotpaths.rs`.
