//! Benchmark harness (under construction).
