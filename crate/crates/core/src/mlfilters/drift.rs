use serde::{Deserialize, Serialize};

use super::linear::LinearFilter;

/// Fraction of samples with `|w.x + b| <= band`; zero for no samples.
pub fn margin_density<'a>(xs: impl IntoIterator<Item = &'a [f64]>, filter: &LinearFilter, band: f64) -> f64 {
    let (mut inside, mut n) = (0usize, 0usize);
    for x in xs {
        n += 1;
        if filter.margin(x).abs() <= band {
            inside += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        inside as f64 / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftStatus {
    Stable,
    Drift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    pub margin_band: f64,
    pub lambda: f64,
    /// Samples per density window.
    pub window: usize,
    pub consecutive_needed: usize,
    /// Folds used to estimate the reference density spread.
    pub folds: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig { margin_band: 1.0, lambda: 3.0, window: 500, consecutive_needed: 2, folds: 5 }
    }
}

/// Margin-density drift detector.
///
/// Densities are computed over tumbling windows of `window` samples; drift is
/// flagged once `consecutive_needed` successive windows exceed
/// `rho_ref + lambda * sigma_ref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftMonitor {
    pub config: MonitorConfig,
    pub rho_ref: f64,
    pub sigma_ref: f64,
    above: usize,
    pending: Vec<f64>,
}

impl DriftMonitor {
    pub fn new(config: MonitorConfig, rho_ref: f64, sigma_ref: f64) -> Self {
        DriftMonitor { config, rho_ref, sigma_ref, above: 0, pending: Vec::new() }
    }

    /// Reference statistics from the training data: the mean density over
    /// `folds` contiguous folds, and its population standard deviation. The
    /// spread is floored at the binomial standard error of one window, so
    /// folds that agree by chance do not make the threshold razor thin.
    pub fn calibrate(config: MonitorConfig, filter: &LinearFilter, training: &[Vec<f64>]) -> Self {
        let k = config.folds.max(1).min(training.len().max(1));
        let size = training.len().div_ceil(k).max(1);
        let densities: Vec<f64> = training
            .chunks(size)
            .map(|fold| margin_density(fold.iter().map(Vec::as_slice), filter, config.margin_band))
            .collect();
        let n = densities.len().max(1) as f64;
        let rho = densities.iter().sum::<f64>() / n;
        let var = densities.iter().map(|d| (d - rho).powi(2)).sum::<f64>() / n;
        let p = rho.max(1.0 / config.window as f64).min(1.0);
        let floor = (p * (1.0 - p) / config.window as f64).sqrt();
        DriftMonitor::new(config, rho, var.sqrt().max(floor))
    }

    pub fn threshold(&self) -> f64 {
        self.rho_ref + self.config.lambda * self.sigma_ref
    }

    /// Feeds one completed window's density.
    pub fn check_density(&mut self, density: f64) -> DriftStatus {
        if density > self.threshold() {
            self.above += 1;
        } else {
            self.above = 0;
        }
        if self.above >= self.config.consecutive_needed {
            DriftStatus::Drift
        } else {
            DriftStatus::Stable
        }
    }

    /// Feeds one sample margin; returns a status each time a window fills.
    pub fn push_margin(&mut self, margin: f64) -> Option<DriftStatus> {
        self.pending.push(margin);
        if self.pending.len() < self.config.window {
            return None;
        }
        let band = self.config.margin_band;
        let density = self.pending.iter().filter(|m| m.abs() <= band).count() as f64 / self.pending.len() as f64;
        self.pending.clear();
        Some(self.check_density(density))
    }

    pub fn reset(&mut self) {
        self.above = 0;
        self.pending.clear();
    }
}
