//! Benchmark-only crate; see `benches/csge.rs`.
