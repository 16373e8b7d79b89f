//! Criterion benchmarks for `perclab-core`; see `benches/`.
