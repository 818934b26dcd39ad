use std::collections::BTreeMap;

use rand::Rng;

use super::profile::Signal;

/// Words any post may use regardless of topic.
pub const FILLER: [&str; 20] = [
    "the", "a", "so", "just", "now", "today", "omg", "news", "wow", "this", "is", "after", "via", "breaking",
    "update", "pic", "more", "again", "really", "big",
];

/// Filler share of each token, per user group: terse, chatty, average.
pub const USER_FILLER_MASS: [f64; 3] = [0.15, 0.35, 0.25];

/// Regions favour a few filler words (indices into [`FILLER`]).
const REGIONAL: [[usize; 4]; 3] = [[0, 5, 7, 13], [2, 6, 8, 17], [3, 10, 14, 19]];

pub const LOCATION_GROUPS: usize = REGIONAL.len();

/// What the next word is conditioned on: the signal being expressed, the
/// previous word, the author's user group and the post's location group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context {
    pub signal: usize,
    pub prev: Option<usize>,
    pub user_group: usize,
    pub location_group: usize,
}

/// Bigram language model over signal pools plus shared filler words.
///
/// A step draws filler with the user group's filler mass and otherwise a
/// word from the signal's pool, where Zipf-like base weights are boosted for
/// the two words that follow the previous one in the pool.
#[derive(Debug, Clone)]
pub struct SynthLanguageModel {
    signals: Vec<Signal>,
    vocab: Vec<String>,
    index: BTreeMap<String, usize>,
    /// Vocabulary ids of each signal's pool.
    pools: Vec<Vec<usize>>,
    filler: Vec<usize>,
}

impl SynthLanguageModel {
    pub fn new(signals: Vec<Signal>) -> Self {
        let mut vocab = Vec::new();
        let mut index = BTreeMap::new();
        let mut id = |w: &str, vocab: &mut Vec<String>| {
            *index.entry(w.to_string()).or_insert_with(|| {
                vocab.push(w.to_string());
                vocab.len() - 1
            })
        };
        let pools = signals.iter().map(|s| s.tokens.iter().map(|t| id(t, &mut vocab)).collect()).collect();
        let filler = FILLER.iter().map(|t| id(t, &mut vocab)).collect();
        SynthLanguageModel { signals, vocab, index, pools, filler }
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn is_filler(&self, id: usize) -> bool {
        self.filler.contains(&id)
    }

    /// Next-word distribution as `(vocab id, probability)`, summing to 1.
    pub fn transition(&self, ctx: Context) -> Vec<(usize, f64)> {
        let mass = USER_FILLER_MASS[ctx.user_group % USER_FILLER_MASS.len()];
        let pool = &self.pools[ctx.signal];
        let prev_rank = ctx.prev.and_then(|p| pool.iter().position(|&w| w == p));
        let pool_weights: Vec<f64> = (0..pool.len())
            .map(|j| {
                let base = 1.0 / ((j + 1) as f64).powf(0.7);
                match prev_rank {
                    Some(r) if j == r => 0.0,
                    Some(r) if j == (r + 1) % pool.len() => 4.0 * base,
                    Some(r) if j == (r + 2) % pool.len() => 2.0 * base,
                    _ => base,
                }
            })
            .collect();
        let regional = &REGIONAL[ctx.location_group % REGIONAL.len()];
        let filler_weights: Vec<f64> = (0..self.filler.len())
            .map(|j| {
                if ctx.prev == Some(self.filler[j]) {
                    0.0
                } else if regional.contains(&j) {
                    3.0
                } else {
                    1.0
                }
            })
            .collect();
        let mut out = Vec::with_capacity(pool.len() + self.filler.len());
        let mut push = |ids: &[usize], weights: &[f64], share: f64| {
            let total: f64 = weights.iter().sum();
            if total > 0.0 {
                for (&id, w) in ids.iter().zip(weights) {
                    if *w > 0.0 {
                        out.push((id, share * w / total));
                    }
                }
            }
        };
        let pool_total: f64 = pool_weights.iter().sum();
        // a one-word pool right after its only word has nowhere to go but filler
        let (pool_share, filler_share) = if pool_total > 0.0 { (1.0 - mass, mass) } else { (0.0, 1.0) };
        push(pool, &pool_weights, pool_share);
        push(&self.filler, &filler_weights, filler_share);
        out
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, signal: usize, user_group: usize, location_group: usize, len: usize) -> Vec<String> {
        let mut words = Vec::with_capacity(len);
        let mut prev = None;
        for _ in 0..len {
            let dist = self.transition(Context { signal, prev, user_group, location_group });
            let mut u: f64 = rng.gen();
            let mut pick = dist.last().map(|d| d.0).expect("non-empty distribution");
            for (id, p) in &dist {
                if u < *p {
                    pick = *id;
                    break;
                }
                u -= p;
            }
            words.push(self.vocab[pick].clone());
            prev = Some(pick);
        }
        words
    }
}
