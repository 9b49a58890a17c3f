//! Benchmarks for hst-core live in benches/.
