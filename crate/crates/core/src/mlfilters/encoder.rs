use std::collections::HashMap;
use std::path::Path;

use super::MlError;
use crate::metadata::tokenize;

/// Turns text into a fixed-width vector.
pub trait TextEncoder: Send + Sync {
    fn dims(&self) -> usize;
    fn encode(&self, text: &str) -> Vec<f64>;
}

pub const DEFAULT_DIMS: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET ^ seed;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Signed feature hashing of word unigrams and bigrams, L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEncoder {
    dims: usize,
    seed: u64,
}

impl HashingEncoder {
    pub fn new(dims: usize) -> Self {
        Self::with_seed(dims, 0)
    }

    pub fn with_seed(dims: usize, seed: u64) -> Self {
        assert!(dims > 0, "encoder needs at least one dimension");
        HashingEncoder { dims, seed }
    }

    fn add(&self, v: &mut [f64], feature: &str) {
        let h = fnv1a(self.seed, feature.as_bytes());
        let index = (h % self.dims as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[index] += sign;
    }
}

impl TextEncoder for HashingEncoder {
    fn dims(&self) -> usize {
        self.dims
    }

    fn encode(&self, text: &str) -> Vec<f64> {
        let tokens = tokenize(text);
        let mut v = vec![0.0; self.dims];
        for t in &tokens {
            self.add(&mut v, t);
        }
        for pair in tokens.windows(2) {
            self.add(&mut v, &format!("{} {}", pair[0], pair[1]));
        }
        normalize(&mut v);
        v
    }
}

/// Scales `v` to unit length; a zero vector stays zero.
pub fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Mean of pre-trained token vectors, L2-normalized.
///
/// The file holds one token per line followed by its components, separated
/// by whitespace (the common GloVe text layout).
#[derive(Debug, Clone)]
pub struct EmbeddingEncoder {
    dims: usize,
    table: HashMap<String, Vec<f64>>,
}

impl EmbeddingEncoder {
    pub fn load(path: &Path) -> Result<Self, MlError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, MlError> {
        let mut table = HashMap::new();
        let mut dims = None;
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let v: Vec<f64> = parts
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| MlError::Corrupt(format!("embedding line {}: {e}", i + 1)))?;
            match dims {
                None => dims = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(MlError::DimensionMismatch { expected: d, found: v.len() })
                }
                _ => {}
            }
            table.insert(token.to_lowercase(), v);
        }
        match dims {
            Some(dims) if dims > 0 => Ok(EmbeddingEncoder { dims, table }),
            _ => Err(MlError::Corrupt("embedding file has no vectors".into())),
        }
    }
}

impl TextEncoder for EmbeddingEncoder {
    fn dims(&self) -> usize {
        self.dims
    }

    fn encode(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dims];
        for t in tokenize(text) {
            if let Some(e) = self.table.get(&t) {
                v.iter_mut().zip(e).for_each(|(a, b)| *a += b);
            }
        }
        normalize(&mut v);
        v
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
    }

    #[test]
    fn empty_text_is_zero() {
        assert!(HashingEncoder::new(64).encode("").iter().all(|&x| x == 0.0));
        assert!(HashingEncoder::new(64).encode("!!!").iter().all(|&x| x == 0.0));
    }

    #[test]
    fn deterministic_unit_norm() {
        let e = HashingEncoder::new(256);
        let a = e.encode("landslide kills three");
        assert_eq!(a, e.encode("landslide kills three"));
        assert!((dot(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn suffix_changes_direction() {
        let e = HashingEncoder::new(256);
        let a = e.encode("landslide kills");
        let b = e.encode("landslide kills vote for the senate");
        let c = cosine(&a, &b);
        assert!(c < 1.0 && c > 0.0, "{c}");
    }

    #[test]
    fn embedding_file() {
        let e = EmbeddingEncoder::parse("rain 1 0\nmud 0 1\n").unwrap();
        let v = e.encode("Rain and mud");
        assert!((v[0] - 0.5f64.sqrt()).abs() < 1e-12 && (v[1] - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(EmbeddingEncoder::parse("a 1 2\nb 1\n").is_err());
    }
}
