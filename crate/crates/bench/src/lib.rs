//! Criterion benchmarks for `papr-core`; see `benches/throughput.rs`.
