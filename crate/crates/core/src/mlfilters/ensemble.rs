use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linear::{class_balanced, train_sgd, Algo, LinearFilter, Sample, SgdConfig};
use super::metrics::Confusion;
use super::MlError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Scheme {
    /// Mean of member votes.
    Unweighted,
    /// Fixed per-member weights supplied by configuration.
    ExpertWeighted { values: Vec<f64> },
    /// Weights proportional to validation f-scores.
    ModelWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemberSpec {
    pub algo: Algo,
    #[serde(default)]
    pub sgd: SgdConfig,
}

pub fn default_members() -> Vec<MemberSpec> {
    vec![
        MemberSpec { algo: Algo::Logistic, sgd: SgdConfig::default() },
        MemberSpec { algo: Algo::Hinge, sgd: SgdConfig::default() },
        MemberSpec { algo: Algo::Logistic, sgd: SgdConfig { l2: 1e-3, seed: 11, ..SgdConfig::default() } },
    ]
}

/// `w_i = f_i / sum(f)`; all-zero scores give equal weights.
pub fn model_weights(fscores: &[f64]) -> Vec<f64> {
    let total: f64 = fscores.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / fscores.len() as f64; fscores.len()];
    }
    fscores.iter().map(|f| f / total).collect()
}

pub fn expert_weights(values: &[f64], members: usize) -> Result<Vec<f64>, MlError> {
    if values.len() != members {
        return Err(MlError::InvalidConfig(format!("{} expert weights for {members} members", values.len())));
    }
    if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || values.iter().sum::<f64>() <= 0.0 {
        return Err(MlError::InvalidConfig("expert weights must be >= 0 with a positive sum".into()));
    }
    let total: f64 = values.iter().sum();
    Ok(values.iter().map(|v| v / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFilter {
    pub members: Vec<LinearFilter>,
    pub weights: Vec<f64>,
    pub scheme: Scheme,
}

impl EnsembleFilter {
    pub fn dims(&self) -> usize {
        self.members.first().map_or(0, |m| m.w.len())
    }

    pub fn trained_at(&self) -> i64 {
        self.members.iter().map(|m| m.trained_at).max().unwrap_or(0)
    }

    pub fn val_fscores(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.val_fscore).collect()
    }

    /// Vote-weighted relevance score in `[0, 1]`.
    pub fn score(&self, x: &[f64]) -> f64 {
        let votes = self.members.iter().map(|m| m.predict(x));
        match self.scheme {
            Scheme::Unweighted => votes.filter(|&v| v).count() as f64 / self.members.len() as f64,
            _ => votes.zip(&self.weights).filter(|(v, _)| *v).map(|(_, w)| w).sum(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.score(x) >= 0.5
    }

    /// The member the drift monitor watches: the highest weight, first on ties.
    pub fn lead(&self) -> &LinearFilter {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        &self.members[best]
    }
}

/// Splits indices 80/20 within each class. A class with a single sample
/// keeps it for training.
pub fn stratified_split(labels: &[bool], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_val = if idx.len() >= 2 { ((idx.len() as f64 * 0.2).round() as usize).max(1) } else { 0 };
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Trains one member per spec on a stratified 80/20 split and weights the
/// ensemble by `scheme`. With `start`, members warm-start from its weights.
pub fn train_filter(
    xs: &[Vec<f64>],
    ys: &[bool],
    members: &[MemberSpec],
    scheme: &Scheme,
    trained_at: i64,
    seed: u64,
    start: Option<&EnsembleFilter>,
) -> Result<EnsembleFilter, MlError> {
    if xs.len() != ys.len() {
        return Err(MlError::InvalidConfig(format!("{} vectors for {} labels", xs.len(), ys.len())));
    }
    if !ys.iter().any(|&y| y) || ys.iter().all(|&y| y) {
        return Err(MlError::SingleClass);
    }
    if members.is_empty() {
        return Err(MlError::InvalidConfig("ensemble needs at least one member".into()));
    }
    if let Some(s) = start {
        if s.members.len() != members.len() {
            return Err(MlError::InvalidConfig("warm start has a different member count".into()));
        }
    }
    let (train_idx, val_idx) = stratified_split(ys, seed);
    let mut train: Vec<Sample> =
        train_idx.iter().map(|&i| Sample { x: xs[i].clone(), y: ys[i], weight: 1.0 }).collect();
    class_balanced(&mut train);

    let mut trained = Vec::with_capacity(members.len());
    for (k, spec) in members.iter().enumerate() {
        let init = start.map(|s| &s.members[k]);
        let sgd = SgdConfig { seed: spec.sgd.seed ^ seed, ..spec.sgd };
        let mut filter = train_sgd(&train, spec.algo, &sgd, init)?.filter;
        let conf = Confusion::from_pairs(val_idx.iter().map(|&i| (filter.predict(&xs[i]), ys[i])));
        filter.val_fscore = conf.fscore();
        filter.trained_at = trained_at;
        trained.push(filter);
    }
    let weights = match scheme {
        Scheme::Unweighted => vec![1.0 / trained.len() as f64; trained.len()],
        Scheme::ExpertWeighted { values } => expert_weights(values, trained.len())?,
        Scheme::ModelWeighted => model_weights(&trained.iter().map(|m| m.val_fscore).collect::<Vec<_>>()),
    };
    Ok(EnsembleFilter { members: trained, weights, scheme: scheme.clone() })
}

/// Keeps at most `ratio * positives` negatives, chosen uniformly at random and
/// returned in their original order.
pub fn cap_negatives<T>(negatives: Vec<T>, positives: usize, ratio: f64, seed: u64) -> Vec<T> {
    let cap = (positives as f64 * ratio).floor() as usize;
    if negatives.len() <= cap {
        return negatives;
    }
    let mut keep: Vec<usize> = (0..negatives.len()).collect();
    keep.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut mask = vec![false; negatives.len()];
    keep[..cap].iter().for_each(|&i| mask[i] = true);
    negatives.into_iter().zip(mask).filter_map(|(n, k)| k.then_some(n)).collect()
}
