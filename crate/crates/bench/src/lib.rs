//! Criterion benchmarks for `cvtf-core`; see `benches/`.
