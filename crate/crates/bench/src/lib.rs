//! Benchmarks for the flow kernels live in `benches/`.
