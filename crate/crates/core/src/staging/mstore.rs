use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

use super::clock::Clock;
use super::journal::Journal;
use super::StagingError;

pub const DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetadataKind {
    LocationString,
    EventLocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataEntry {
    pub kind: MetadataKind,
    pub value: String,
    pub expires_at: i64,
}

impl MetadataEntry {
    pub fn new(kind: MetadataKind, value: impl Into<String>, expires_at: i64) -> Self {
        MetadataEntry { kind, value: value.into(), expires_at }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendPolicy {
    Overwrite,
    /// Add `threshold` seconds to an existing entry whose remaining TTL is
    /// below `threshold`; otherwise leave it alone.
    ExtendIfBelow(i64),
}

#[derive(Debug, Serialize, Deserialize)]
struct SetEntry {
    op: String,
    kind: MetadataKind,
    value: String,
    expires_at: i64,
    ts: i64,
}

type EntryKey = (MetadataKind, String);

/// Shared metadata store whose entries expire.
pub struct MetadataStore {
    entries: Mutex<BTreeMap<EntryKey, MetadataEntry>>,
    journal: Mutex<Option<Journal>>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for MetadataStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetadataStore").field("len", &self.lock().len()).finish()
    }
}

impl MetadataStore {
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        MetadataStore {
            entries: Mutex::new(BTreeMap::new()),
            journal: Mutex::new(None),
            clock,
        }
    }

    pub fn open(path: &Path, clock: Arc<dyn Clock>) -> Result<Self, StagingError> {
        let (journal, sets) = Journal::open::<SetEntry>(path)?;
        let mut entries = BTreeMap::new();
        for set in sets {
            let entry = MetadataEntry::new(set.kind, set.value, set.expires_at);
            entries.insert(entry_key(&entry), entry);
        }
        Ok(MetadataStore {
            entries: Mutex::new(entries),
            journal: Mutex::new(Some(journal)),
            clock,
        })
    }

    pub fn now(&self) -> i64 {
        self.clock.now()
    }

    fn lock(&self) -> MutexGuard<'_, BTreeMap<EntryKey, MetadataEntry>> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn put(&self, entry: MetadataEntry, policy: ExtendPolicy) -> Result<(), StagingError> {
        let now = self.clock.now();
        if entry.expires_at <= now {
            return Err(StagingError::ExpiredEntry {
                value: entry.value,
                expires_at: entry.expires_at,
                now,
            });
        }
        let mut entries = self.lock();
        let key = entry_key(&entry);
        let live = entries.get(&key).filter(|e| e.expires_at > now);
        let next = match (policy, live) {
            (ExtendPolicy::ExtendIfBelow(threshold), Some(existing)) => {
                if existing.expires_at - now < threshold {
                    MetadataEntry {
                        expires_at: existing.expires_at + threshold,
                        ..existing.clone()
                    }
                } else {
                    return Ok(());
                }
            }
            _ => entry,
        };
        if entries.get(&key) == Some(&next) {
            return Ok(());
        }
        {
            let mut journal = self.journal.lock().unwrap_or_else(|e| e.into_inner());
            if let Some(journal) = journal.as_mut() {
                journal.append(&SetEntry {
                    op: "set".into(),
                    kind: next.kind,
                    value: next.value.clone(),
                    expires_at: next.expires_at,
                    ts: now,
                })?;
            }
        }
        entries.insert(key, next);
        Ok(())
    }

    /// Unexpired entries whose value occurs in `text`, ignoring case.
    pub fn lookup_substrings(&self, text: &str, now: i64) -> Vec<MetadataEntry> {
        let haystack = text.to_lowercase();
        self.lock()
            .iter()
            .filter(|((_, folded), e)| e.expires_at > now && haystack.contains(folded.as_str()))
            .map(|(_, e)| e.clone())
            .collect()
    }

    pub fn get(&self, kind: MetadataKind, value: &str, now: i64) -> Option<MetadataEntry> {
        self.lock()
            .get(&(kind, value.to_lowercase()))
            .filter(|e| e.expires_at > now)
            .cloned()
    }

    /// All unexpired entries, ordered by kind then case-folded value.
    pub fn snapshot(&self, now: i64) -> Vec<MetadataEntry> {
        self.lock().values().filter(|e| e.expires_at > now).cloned().collect()
    }

    pub fn purge_expired(&self, now: i64) -> usize {
        let mut entries = self.lock();
        let before = entries.len();
        entries.retain(|_, e| e.expires_at > now);
        before - entries.len()
    }
}

fn entry_key(entry: &MetadataEntry) -> EntryKey {
    (entry.kind, entry.value.to_lowercase())
}
