//! Synthetic datasets and run-directory comparison for pipeline tests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use driftwatch::app::{run_pipeline, CrashPoint, Mode, PipelineConfig, RunOptions, RunSummary, REPORTS_DIR};
use driftwatch::metadata::Gazetteer;
use driftwatch::synth::{generate, SynthConfig};

/// Writes a generated dataset to `dir` and returns a pipeline config for it.
pub fn dataset(dir: &Path, synth: &SynthConfig) -> PipelineConfig {
    generate(synth, &Gazetteer::bundled()).unwrap().write_dir(dir).unwrap();
    let mut config = PipelineConfig::for_synth(synth);
    config.rebase(dir);
    config
}

/// A four-window stream small enough for repeated runs.
pub fn small_synth(seed: u64) -> SynthConfig {
    SynthConfig { seed, n_windows: 4, posts_per_window: 600, drift_at: Some(3), ..SynthConfig::default() }
}

pub fn run(config: &PipelineConfig, mode: Mode, out: &Path, crash: Option<CrashPoint>) -> RunSummary {
    run_pipeline(config, &RunOptions { mode, out: out.to_path_buf(), crash }).unwrap()
}

/// Every file under `out/reports`, keyed by relative path.
pub fn report_files(out: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let root = out.join(REPORTS_DIR);
    let mut files = BTreeMap::new();
    let mut stack = vec![root.clone()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(&root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    files
}
