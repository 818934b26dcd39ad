use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{read_detections, read_windows, WindowReport};
use super::AppError;

/// Per-window comparison of an adaptive run (`a`) against a static one (`b`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub window: usize,
    pub precision_a: f64,
    pub recall_a: f64,
    pub fscore_a: f64,
    pub precision_b: f64,
    pub recall_b: f64,
    pub fscore_b: f64,
    /// `fscore_a - fscore_b`.
    pub delta: f64,
    /// Events detected by both runs.
    pub both_apps: usize,
    /// False-alarm cells of the static run that the adaptive run avoided.
    pub false_pos_corrected: usize,
    /// Events only the adaptive run detected.
    pub false_neg_recovered: usize,
    /// `both_apps + false_neg_recovered`.
    pub total_adaptive: usize,
    /// Events the static run detected.
    pub total_static: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub mean_fscore_a: f64,
    pub mean_fscore_b: f64,
    pub variance_a: f64,
    pub variance_b: f64,
    pub total_adaptive: usize,
    pub total_static: usize,
    /// Percent more events found by the adaptive run; `None` when the static run found none.
    pub event_increase_pct: Option<f64>,
}

/// Population variance by Welford's update.
pub fn variance(xs: &[f64]) -> f64 {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    if xs.is_empty() {
        0.0
    } else {
        m2 / xs.len() as f64
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Compares the report directories of two runs window by window.
pub fn compare_runs(a: &Path, b: &Path) -> Result<Comparison, AppError> {
    let wa = read_windows(a)?;
    let wb = read_windows(b)?;
    let ids = |w: &[WindowReport]| w.iter().map(|r| r.window).collect::<Vec<_>>();
    if ids(&wa) != ids(&wb) {
        return Err(AppError::WindowMismatch { a: wa.len(), b: wb.len() });
    }
    let mut rows = Vec::with_capacity(wa.len());
    for (ra, rb) in wa.iter().zip(&wb) {
        let da = read_detections(a, ra.window)?;
        let db = read_detections(b, rb.window)?;
        let ea: BTreeSet<&String> = da.events.iter().collect();
        let eb: BTreeSet<&String> = db.events.iter().collect();
        let fa: BTreeSet<_> = da.false_cells.iter().collect();
        let both = ea.intersection(&eb).count();
        let recovered = ea.difference(&eb).count();
        rows.push(ComparisonRow {
            window: ra.window,
            precision_a: ra.precision,
            recall_a: ra.recall,
            fscore_a: ra.fscore,
            precision_b: rb.precision,
            recall_b: rb.recall,
            fscore_b: rb.fscore,
            delta: ra.fscore - rb.fscore,
            both_apps: both,
            false_pos_corrected: db.false_cells.iter().filter(|c| !fa.contains(c)).count(),
            false_neg_recovered: recovered,
            total_adaptive: both + recovered,
            total_static: eb.len(),
        });
    }
    let fa: Vec<f64> = rows.iter().map(|r| r.fscore_a).collect();
    let fb: Vec<f64> = rows.iter().map(|r| r.fscore_b).collect();
    let total_adaptive = rows.iter().map(|r| r.total_adaptive).sum();
    let total_static: usize = rows.iter().map(|r| r.total_static).sum();
    Ok(Comparison {
        mean_fscore_a: mean(&fa),
        mean_fscore_b: mean(&fb),
        variance_a: variance(&fa),
        variance_b: variance(&fb),
        event_increase_pct: (total_static > 0)
            .then(|| 100.0 * (total_adaptive as f64 - total_static as f64) / total_static as f64),
        total_adaptive,
        total_static,
        rows,
    })
}

pub fn comparison_csv(c: &Comparison) -> String {
    let mut out = String::from(
        "window,precision_a,recall_a,fscore_a,precision_b,recall_b,fscore_b,delta,\
both_apps,false_pos_corrected,false_neg_recovered,total_adaptive,total_static\n",
    );
    for r in &c.rows {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{}",
            r.window,
            r.precision_a,
            r.recall_a,
            r.fscore_a,
            r.precision_b,
            r.recall_b,
            r.fscore_b,
            r.delta,
            r.both_apps,
            r.false_pos_corrected,
            r.false_neg_recovered,
            r.total_adaptive,
            r.total_static,
        );
    }
    out
}
