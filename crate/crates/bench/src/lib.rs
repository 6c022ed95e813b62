//! Fixtures shared by the benchmarks in `benches/`.

use std::path::PathBuf;

use vecm_core::pipeline::{synthetic_config, PipelineConfig};

/// Writes a cointegrated synthetic dataset into a fresh temp directory.
pub fn synthetic_fixture(tag: &str, seed: u64) -> (PathBuf, PipelineConfig) {
    let dir = std::env::temp_dir().join(format!("vecm-bench-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let config = synthetic_config(&dir, true, seed).expect("synthetic config");
    (dir, config)
}
