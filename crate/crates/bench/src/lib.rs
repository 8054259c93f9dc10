//! Criterion benchmarks for `fairmix-core`; see `benches/`.
