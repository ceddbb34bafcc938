//! Benchmark crate for the flatcone engine. All benchmarks live under `benches/`.
