//! Two-dimensional streams for exercising the margin-density detector.
//!
//! The watched filter is `x0 >= 0`. Stationary samples sit at `x0 = ±2 + U(-1.5, 1.5)`,
//! so one in six lands inside the unit margin band. Drifted samples move to
//! `±1 + U(-1.5, 1.5)`, putting half of them inside the band.

use driftwatch::mlfilters::{DriftMonitor, DriftStatus, LinearFilter, MonitorConfig, Algo};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WINDOW: usize = 500;

pub fn filter() -> LinearFilter {
    LinearFilter { w: vec![1.0, 0.0], b: 0.0, algo: Algo::Hinge, trained_at: 0, val_fscore: 1.0 }
}

pub fn sample(rng: &mut ChaCha8Rng, drifted: bool) -> Vec<f64> {
    let center = if drifted { 1.0 } else { 2.0 };
    let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    vec![side * (center + rng.gen_range(-1.5..1.5)), rng.gen_range(-1.0..1.0)]
}

/// Calibrates on 5 stationary windows' worth of data, then streams
/// `windows` windows, drifting from window index `drift_at` on. Returns the
/// detector status after each window.
pub fn run(seed: u64, windows: usize, drift_at: Option<usize>) -> Vec<DriftStatus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = filter();
    let training: Vec<Vec<f64>> = (0..5 * WINDOW).map(|_| sample(&mut rng, false)).collect();
    let mut monitor = DriftMonitor::calibrate(MonitorConfig::default(), &f, &training);
    let mut out = Vec::with_capacity(windows);
    for w in 0..windows {
        let drifted = drift_at.is_some_and(|d| w >= d);
        for _ in 0..WINDOW {
            let x = sample(&mut rng, drifted);
            if let Some(status) = monitor.push_margin(f.margin(&x)) {
                out.push(status);
            }
        }
    }
    out
}

/// Windows between the drift start and the first alarm, if any.
pub fn delay(statuses: &[DriftStatus], drift_at: usize) -> Option<usize> {
    statuses[drift_at..].iter().position(|s| *s == DriftStatus::Drift).map(|p| p + 1)
}
