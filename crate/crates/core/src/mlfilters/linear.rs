use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::dot;
use super::MlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Logistic,
    Hinge,
}

impl Algo {
    /// Loss at signed margin `z = y * (w.x + b)`.
    pub fn loss(self, z: f64) -> f64 {
        match self {
            // log(1 + e^-z), written to stay finite for large |z|
            Algo::Logistic => {
                if z > 0.0 {
                    (-z).exp().ln_1p()
                } else {
                    -z + z.exp().ln_1p()
                }
            }
            Algo::Hinge => (1.0 - z).max(0.0),
        }
    }

    /// d loss / d z.
    pub fn dloss(self, z: f64) -> f64 {
        match self {
            Algo::Logistic => -sigmoid(-z),
            Algo::Hinge => {
                if z < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A linear classifier `w.x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFilter {
    pub w: Vec<f64>,
    pub b: f64,
    pub algo: Algo,
    pub trained_at: i64,
    pub val_fscore: f64,
}

impl LinearFilter {
    pub fn zeros(dims: usize, algo: Algo) -> Self {
        LinearFilter { w: vec![0.0; dims], b: 0.0, algo, trained_at: 0, val_fscore: 0.0 }
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.margin(x) >= 0.0
    }
}

/// A training sample: vector, label, and sample weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: bool,
    pub weight: f64,
}

fn sign(y: bool) -> f64 {
    if y {
        1.0
    } else {
        -1.0
    }
}

/// Per-sample objective `loss(y (w.x + b)) + l2/2 |w|^2`.
pub fn sample_objective(w: &[f64], b: f64, x: &[f64], y: bool, algo: Algo, l2: f64) -> f64 {
    let z = sign(y) * (dot(w, x) + b);
    algo.loss(z) + 0.5 * l2 * dot(w, w)
}

/// Analytic gradient of [`sample_objective`] with respect to `(w, b)`.
pub fn sample_gradient(w: &[f64], b: f64, x: &[f64], y: bool, algo: Algo, l2: f64) -> (Vec<f64>, f64) {
    let s = sign(y);
    let g = algo.dloss(s * (dot(w, x) + b)) * s;
    let gw = w.iter().zip(x).map(|(wi, xi)| g * xi + l2 * wi).collect();
    (gw, g)
}

/// Weighted mean loss plus the L2 penalty.
pub fn objective(filter: &LinearFilter, samples: &[Sample], l2: f64) -> f64 {
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    if total == 0.0 {
        return 0.5 * l2 * dot(&filter.w, &filter.w);
    }
    let loss: f64 = samples
        .iter()
        .map(|s| s.weight * filter.algo.loss(sign(s.y) * filter.margin(&s.x)))
        .sum();
    loss / total + 0.5 * l2 * dot(&filter.w, &filter.w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig { epochs: 30, learning_rate: 0.5, l2: 1e-4, seed: 7 }
    }
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub filter: LinearFilter,
    /// Objective before training, then after each accepted epoch.
    pub objective: Vec<f64>,
}

/// Weights each sample by the inverse frequency of its class, so both
/// classes carry equal total weight.
pub fn class_balanced(samples: &mut [Sample]) {
    let n = samples.len() as f64;
    let pos = samples.iter().filter(|s| s.y).count() as f64;
    let neg = n - pos;
    for s in samples.iter_mut() {
        let c = if s.y { pos } else { neg };
        s.weight = if c > 0.0 { n / (2.0 * c) } else { 0.0 };
    }
}

/// SGD over a fixed shuffled order. An epoch that raises the objective is
/// undone and retried at half the learning rate, so the recorded objective
/// never increases.
pub fn train_sgd(
    samples: &[Sample],
    algo: Algo,
    config: &SgdConfig,
    start: Option<&LinearFilter>,
) -> Result<TrainRun, MlError> {
    let dims = samples.first().map(|s| s.x.len()).ok_or(MlError::NoSamples)?;
    if let Some(s) = samples.iter().find(|s| s.x.len() != dims) {
        return Err(MlError::DimensionMismatch { expected: dims, found: s.x.len() });
    }
    let mut filter = match start {
        Some(f) if f.w.len() != dims => {
            return Err(MlError::DimensionMismatch { expected: dims, found: f.w.len() })
        }
        Some(f) => LinearFilter { algo, ..f.clone() },
        None => LinearFilter::zeros(dims, algo),
    };
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let mean_weight = samples.iter().map(|s| s.weight).sum::<f64>() / samples.len() as f64;
    let mut lr = config.learning_rate;
    let mut history = vec![objective(&filter, samples, config.l2)];
    let mut epoch = 0;
    while epoch < config.epochs {
        let mut next = filter.clone();
        for &i in &order {
            let s = &samples[i];
            let scale = if mean_weight > 0.0 { s.weight / mean_weight } else { 0.0 };
            let (gw, gb) = sample_gradient(&next.w, next.b, &s.x, s.y, algo, config.l2);
            next.w.iter_mut().zip(&gw).for_each(|(w, g)| *w -= lr * scale * g);
            next.b -= lr * scale * gb;
        }
        let value = objective(&next, samples, config.l2);
        let last = *history.last().expect("history starts non-empty");
        if value <= last {
            filter = next;
            history.push(value);
            epoch += 1;
        } else if lr < 1e-8 {
            break;
        } else {
            lr *= 0.5;
        }
    }
    Ok(TrainRun { filter, objective: history })
}
