//! Pipeline orchestration: wires the streamers, event detector, metadata
//! extractor, integrator and filter trainer together through the staging
//! store, scores each data window, and compares runs.
//!
//! A run directory holds:
//!
//! ```text
//! run.json                    mode of the run
//! state/                      journals, filter store and checkpoint
//! reports/windows.csv         one row per window
//! reports/windows.jsonl       the same rows as JSON
//! reports/predictions/wNN.jsonl   per-post scores
//! reports/detections/wNN.json     detected events and false-alarm cells
//! ```

mod compare;
mod config;
mod pipeline;
mod report;

pub use compare::{compare_runs, comparison_csv, variance, Comparison, ComparisonRow};
pub use config::{BENCHMARK_DIMS, EnsembleConfig, Mode, Paths, PipelineConfig, Retrieval};
pub use pipeline::{run_pipeline, CrashPoint, RunOptions, RunSummary, Stage, REPORTS_DIR, STATE_DIR};
pub use report::{
    read_detections, read_jsonl, read_windows, windows_csv, write_atomic, Prediction, WindowDetections,
    WindowReport, DETECTIONS_DIR, PREDICTIONS_DIR, WINDOWS_CSV, WINDOWS_JSONL,
};

use crate::hc_events::HcError;
use crate::hdi::HdiError;
use crate::ingest::IngestError;
use crate::metadata::MetadataError;
use crate::mlfilters::MlError;
use crate::staging::StagingError;
use crate::synth::SynthError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("report: {0}")]
    Report(String),
    #[error("runs cover different windows ({a} vs {b})")]
    WindowMismatch { a: usize, b: usize },
    #[error("injected crash at tick {tick}, stage {stage:?}")]
    InjectedCrash { tick: u64, stage: Stage },
    #[error(transparent)]
    Staging(#[from] StagingError),
    #[error(transparent)]
    Metadata(#[from] MetadataError),
    #[error(transparent)]
    Events(#[from] HcError),
    #[error(transparent)]
    Hdi(#[from] HdiError),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
