//! Filter store: one directory per trained ensemble.
//!
//! Layout of entry `k` under the store root:
//!
//! ```text
//! w{k:04}/meta.json     timestamp, signature, weights, member metadata
//! w{k:04}/weights.bin   little-endian: u32 member count, then per member
//!                       u32 dims, dims x f64 weights, f64 bias
//! w{k:04}/labels.jsonl  the labeled training set, one JSON object per line
//! ```
//!
//! Entries are written to a temporary directory and renamed into place, so a
//! crash never leaves a half-written entry visible.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ensemble::{EnsembleFilter, Scheme};
use super::linear::{Algo, LinearFilter};
use super::MlError;

/// Centroid and size of the data a filter was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSignature {
    pub centroid: Vec<f64>,
    pub count: usize,
}

impl TrainSignature {
    pub fn of(xs: &[Vec<f64>], dims: usize) -> Self {
        let mut centroid = vec![0.0; dims];
        for x in xs {
            centroid.iter_mut().zip(x).for_each(|(c, v)| *c += v);
        }
        if !xs.is_empty() {
            centroid.iter_mut().for_each(|c| *c /= xs.len() as f64);
        }
        TrainSignature { centroid, count: xs.len() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FStoreEntry {
    pub index: usize,
    pub filter: EnsembleFilter,
    pub train_timestamp: i64,
    pub signature: TrainSignature,
    /// Archived labeled set, `None` for in-memory stores.
    pub train_data_ref: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Query<'a> {
    Latest,
    Nearest(&'a [f64]),
}

#[derive(Debug, Serialize, Deserialize)]
struct MemberMeta {
    algo: Algo,
    trained_at: i64,
    val_fscore: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    timestamp: i64,
    signature: TrainSignature,
    weights: Vec<f64>,
    scheme: Scheme,
    members: Vec<MemberMeta>,
}

#[derive(Debug, Default)]
pub struct FStore {
    root: Option<PathBuf>,
    entries: Vec<FStoreEntry>,
}

impl FStore {
    pub fn in_memory() -> Self {
        FStore::default()
    }

    /// Opens (creating if needed) a store directory and loads every entry.
    /// Leftover temporary directories from an interrupted write are removed.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, MlError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        let mut found = Vec::new();
        for dirent in fs::read_dir(&root)? {
            let dirent = dirent?;
            let name = dirent.file_name().to_string_lossy().into_owned();
            if name.starts_with(".tmp") {
                fs::remove_dir_all(dirent.path())?;
                continue;
            }
            if let Some(index) = name.strip_prefix('w').and_then(|n| n.parse::<usize>().ok()) {
                found.push((index, dirent.path()));
            }
        }
        found.sort();
        let entries = found
            .into_iter()
            .map(|(index, dir)| read_entry(index, &dir))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FStore { root: Some(root), entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[FStoreEntry] {
        &self.entries
    }

    /// Stores a filter with its signature and labeled training set.
    pub fn insert<T: Serialize>(
        &mut self,
        filter: EnsembleFilter,
        train_timestamp: i64,
        signature: TrainSignature,
        labeled: &[T],
    ) -> Result<&FStoreEntry, MlError> {
        if signature.centroid.len() != filter.dims() {
            return Err(MlError::DimensionMismatch { expected: filter.dims(), found: signature.centroid.len() });
        }
        let index = self.entries.last().map_or(0, |e| e.index + 1);
        let mut entry = FStoreEntry { index, filter, train_timestamp, signature, train_data_ref: None };
        if let Some(root) = &self.root {
            entry.train_data_ref = Some(write_entry(root, &entry, labeled)?);
        }
        self.entries.push(entry);
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn get(&self, query: Query<'_>) -> Result<&FStoreEntry, MlError> {
        let mut best: Option<(&FStoreEntry, f64)> = None;
        for e in &self.entries {
            let key = match query {
                // larger is better, so negate for a shared minimisation
                Query::Latest => -(e.train_timestamp as f64),
                Query::Nearest(q) => squared_distance(q, &e.signature.centroid),
            };
            let better = match best {
                None => true,
                Some((b, k)) => key < k || (key == k && e.train_timestamp >= b.train_timestamp),
            };
            if better {
                best = Some((e, key));
            }
        }
        best.map(|(e, _)| e).ok_or(MlError::EmptyStore)
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let d = a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum()
}

pub fn encode_weights(members: &[LinearFilter]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(members.len() as u32).to_le_bytes());
    for m in members {
        out.extend_from_slice(&(m.w.len() as u32).to_le_bytes());
        for w in &m.w {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.extend_from_slice(&m.b.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_weights`]: `(weights, bias)` per member.
pub fn decode_weights(bytes: &[u8]) -> Result<Vec<(Vec<f64>, f64)>, MlError> {
    let mut pos = 0;
    let mut take = |n: usize| -> Result<&[u8], MlError> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| MlError::Corrupt("weights.bin truncated".into()))?;
        pos += n;
        Ok(s)
    };
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes")) as usize;
    let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().expect("8 bytes"));
    let count = u32_at(take(4)?);
    let mut members = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let dims = u32_at(take(4)?);
        let w = take(dims * 8)?.chunks_exact(8).map(f64_at).collect();
        let b = f64_at(take(8)?);
        members.push((w, b));
    }
    if pos != bytes.len() {
        return Err(MlError::Corrupt("trailing bytes in weights.bin".into()));
    }
    Ok(members)
}

fn write_entry<T: Serialize>(root: &Path, entry: &FStoreEntry, labeled: &[T]) -> Result<PathBuf, MlError> {
    let final_dir = root.join(format!("w{:04}", entry.index));
    let tmp = root.join(format!(".tmp-w{:04}", entry.index));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    let f = &entry.filter;
    let meta = Meta {
        timestamp: entry.train_timestamp,
        signature: entry.signature.clone(),
        weights: f.weights.clone(),
        scheme: f.scheme.clone(),
        members: f
            .members
            .iter()
            .map(|m| MemberMeta { algo: m.algo, trained_at: m.trained_at, val_fscore: m.val_fscore })
            .collect(),
    };
    let json = serde_json::to_vec_pretty(&meta).map_err(|e| MlError::Corrupt(e.to_string()))?;
    fs::write(tmp.join("meta.json"), json)?;
    fs::write(tmp.join("weights.bin"), encode_weights(&f.members))?;
    let mut labels = std::io::BufWriter::new(fs::File::create(tmp.join("labels.jsonl"))?);
    for item in labeled {
        serde_json::to_writer(&mut labels, item).map_err(|e| MlError::Corrupt(e.to_string()))?;
        labels.write_all(b"\n")?;
    }
    labels.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    fs::rename(&tmp, &final_dir)?;
    Ok(final_dir.join("labels.jsonl"))
}

fn read_entry(index: usize, dir: &Path) -> Result<FStoreEntry, MlError> {
    let meta: Meta = serde_json::from_slice(&fs::read(dir.join("meta.json"))?)
        .map_err(|e| MlError::Corrupt(format!("{}: {e}", dir.display())))?;
    let raw = decode_weights(&fs::read(dir.join("weights.bin"))?)?;
    if raw.len() != meta.members.len() || meta.weights.len() != raw.len() {
        return Err(MlError::Corrupt(format!("{}: member count mismatch", dir.display())));
    }
    let members = raw
        .into_iter()
        .zip(meta.members)
        .map(|((w, b), m)| LinearFilter { w, b, algo: m.algo, trained_at: m.trained_at, val_fscore: m.val_fscore })
        .collect();
    Ok(FStoreEntry {
        index,
        filter: EnsembleFilter { members, weights: meta.weights, scheme: meta.scheme },
        train_timestamp: meta.timestamp,
        signature: meta.signature,
        train_data_ref: Some(dir.join("labels.jsonl")),
    })
}
