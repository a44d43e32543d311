//! Criterion benchmarks for `evseq-core`; see `benches/`.
