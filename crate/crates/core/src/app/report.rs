use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Mode;
use super::AppError;
use crate::metadata::GridCell;
use crate::mlfilters::{Action, DriftStatus};

pub const WINDOWS_CSV: &str = "windows.csv";
pub const WINDOWS_JSONL: &str = "windows.jsonl";
pub const PREDICTIONS_DIR: &str = "predictions";
pub const DETECTIONS_DIR: &str = "detections";

/// Metrics and bookkeeping for one data window of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub window: usize,
    pub mode: Mode,
    pub start: i64,
    pub end: i64,
    pub posts: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    /// Posts the integrator labeled relevant / irrelevant at the window's end.
    pub labeled_relevant: usize,
    pub labeled_irrelevant: usize,
    /// Event table rows whose event time falls in the window.
    pub events_confirmed: usize,
    /// Planted events with at least one post predicted relevant.
    pub events_detected: usize,
    /// Cells holding posts predicted relevant but no true event post.
    pub false_detections: usize,
    pub drift: DriftStatus,
    /// Filter update performed at the window's end.
    pub action: Action,
    /// Filter store index of the filter that scored this window.
    pub filter: Option<usize>,
    pub filter_trained_at: Option<i64>,
}

const CSV_HEADER: &str = "window,mode,start,end,posts,tp,fp,fn,tn,precision,recall,fscore,\
labeled_relevant,labeled_irrelevant,events_confirmed,events_detected,false_detections,drift,action,filter,filter_trained_at";

fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn windows_csv(reports: &[WindowReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{},{},{},{},{},{}",
            r.window,
            snake(&r.mode),
            r.start,
            r.end,
            r.posts,
            r.tp,
            r.fp,
            r.fn_,
            r.tn,
            r.precision,
            r.recall,
            r.fscore,
            r.labeled_relevant,
            r.labeled_irrelevant,
            r.events_confirmed,
            r.events_detected,
            r.false_detections,
            snake(&r.drift),
            snake(&r.action),
            opt(r.filter),
            opt(r.filter_trained_at),
        );
    }
    out
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("report serializes"));
        out.push('\n');
    }
    out
}

/// Score given to one post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub post_id: String,
    pub t: i64,
    pub score: f64,
    pub relevant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<GridCell>,
}

/// Which events a run found in a window, and where it raised false alarms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WindowDetections {
    pub window: usize,
    /// Planted event ids with a post predicted relevant, sorted.
    pub events: Vec<String>,
    /// Cells whose predicted-relevant posts are all truly irrelevant, sorted.
    pub false_cells: Vec<GridCell>,
}

pub fn window_file(dir: &str, window: usize, ext: &str) -> PathBuf {
    Path::new(dir).join(format!("w{window:02}.{ext}"))
}

/// Writes through a temporary file and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_windows(reports_dir: &Path) -> Result<Vec<WindowReport>, AppError> {
    read_jsonl(&reports_dir.join(WINDOWS_JSONL))
}

pub fn read_detections(reports_dir: &Path, window: usize) -> Result<WindowDetections, AppError> {
    let path = reports_dir.join(window_file(DETECTIONS_DIR, window, "json"));
    let text = fs::read_to_string(&path).map_err(|e| AppError::Report(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| AppError::Report(format!("{}: {e}", path.display())))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::Report(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AppError::Report(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}
