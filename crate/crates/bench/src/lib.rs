//! Criterion benchmarks for `bcp-core`; see `benches/`.
