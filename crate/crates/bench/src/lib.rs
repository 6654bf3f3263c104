//! Criterion benchmarks for the thrift-index pipeline live under `benches/`.
