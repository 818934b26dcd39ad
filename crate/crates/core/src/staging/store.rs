use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::clock::Clock;
use super::journal::Journal;
use super::key::{KeyTemplate, StagingKey};
use super::StagingError;

/// Default garbage-collection period in seconds.
pub const DEFAULT_GC_PERIOD: i64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegistrationId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Export,
    Import,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Unprocessed,
    Processed,
}

#[derive(Debug, Clone)]
pub struct Registration {
    pub id: RegistrationId,
    pub process: String,
    pub direction: Direction,
    pub template: KeyTemplate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagedRecord {
    pub key: StagingKey,
    pub value: Vec<u8>,
    pub status: RecordStatus,
    pub pending_importers: BTreeSet<RegistrationId>,
}

/// Snapshot of record counts, used to audit conservation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StoreAudit {
    pub unprocessed: usize,
    pub awaiting_gc: usize,
    pub deleted: u64,
    pub published: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct JournalEntry {
    op: String,
    key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value_b64: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    importer: Option<String>,
    ts: i64,
}

#[derive(Debug, Default)]
struct Inner {
    registrations: Vec<Registration>,
    records: HashMap<String, StagedRecord>,
    pending: HashMap<RegistrationId, BTreeSet<(u64, String)>>,
    last_id: HashMap<(String, String), u64>,
    awaiting_gc: BTreeSet<String>,
    deleted: u64,
    published: u64,
    last_gc: i64,
}

/// Keyed staging store with export/import templates and per-importer
/// acknowledgment.
///
/// A record stays `unprocessed` until every importer whose template matched
/// its key at publish time has acked it. Polling never changes state, so a
/// consumer that crashes before acking sees the same records again.
pub struct StagingStore {
    inner: Mutex<Inner>,
    journal: Mutex<Option<Journal>>,
    clock: Arc<dyn Clock>,
    gc_period: i64,
}

impl std::fmt::Debug for StagingStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StagingStore").field("gc_period", &self.gc_period).finish()
    }
}

impl StagingStore {
    /// In-memory store without persistence.
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        StagingStore {
            inner: Mutex::new(Inner::default()),
            journal: Mutex::new(None),
            clock,
            gc_period: DEFAULT_GC_PERIOD,
        }
    }

    /// Opens a journal-backed store, replaying any existing journal.
    pub fn open(path: &Path, clock: Arc<dyn Clock>) -> Result<Self, StagingError> {
        let (journal, entries) = Journal::open::<JournalEntry>(path)?;
        let mut inner = Inner::default();
        for entry in entries {
            inner.replay(entry)?;
        }
        Ok(StagingStore {
            inner: Mutex::new(inner),
            journal: Mutex::new(Some(journal)),
            clock,
            gc_period: DEFAULT_GC_PERIOD,
        })
    }

    pub fn with_gc_period(mut self, secs: i64) -> Self {
        self.gc_period = secs;
        self
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn log(&self, entry: &JournalEntry) -> Result<(), StagingError> {
        let mut journal = self.journal.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(journal) = journal.as_mut() {
            journal.append(entry)?;
        }
        Ok(())
    }

    pub fn register_template(
        &self,
        process: &str,
        direction: Direction,
        pattern: &str,
    ) -> Result<RegistrationId, StagingError> {
        let template = KeyTemplate::parse(pattern)?;
        let mut inner = self.lock();
        if let Some(existing) = inner.find_registration(process, direction, &template) {
            return Ok(existing);
        }
        let entry = JournalEntry {
            op: register_op(direction).to_string(),
            key: template.to_string(),
            value_b64: None,
            importer: Some(process.to_string()),
            ts: self.clock.now(),
        };
        self.log(&entry)?;
        Ok(inner.register(process, direction, template))
    }

    pub fn registration(&self, id: RegistrationId) -> Option<Registration> {
        self.lock().registrations.get(id.0 as usize).cloned()
    }

    pub fn publish(&self, key: StagingKey, value: Vec<u8>) -> Result<RecordStatus, StagingError> {
        let mut inner = self.lock();
        inner.check_publish(&key)?;
        let entry = JournalEntry {
            op: "publish".into(),
            key: key.to_string(),
            value_b64: Some(B64.encode(&value)),
            importer: None,
            ts: self.clock.now(),
        };
        self.log(&entry)?;
        Ok(inner.publish(key, value))
    }

    /// Up to `max_n` records still pending for `importer`, ascending by id.
    pub fn poll_unprocessed(
        &self,
        importer: RegistrationId,
        max_n: usize,
    ) -> Result<Vec<StagedRecord>, StagingError> {
        let inner = self.lock();
        inner.check_importer(importer)?;
        let Some(pending) = inner.pending.get(&importer) else {
            return Ok(Vec::new());
        };
        Ok(pending
            .iter()
            .take(max_n)
            .map(|(_, key)| inner.records[key].clone())
            .collect())
    }

    pub fn ack(&self, importer: RegistrationId, key: &StagingKey) -> Result<RecordStatus, StagingError> {
        let mut inner = self.lock();
        inner.check_importer(importer)?;
        let key_text = key.to_string();
        inner.check_ack(importer, &key_text)?;
        let entry = JournalEntry {
            op: "ack".into(),
            key: key_text.clone(),
            value_b64: None,
            importer: Some(importer_label(&inner, importer)),
            ts: self.clock.now(),
        };
        self.log(&entry)?;
        Ok(inner.ack(importer, &key_text))
    }

    /// Deletes every processed record. Returns the number deleted.
    pub fn gc(&self) -> Result<usize, StagingError> {
        let mut inner = self.lock();
        let now = self.clock.now();
        let entry = JournalEntry {
            op: "gc".into(),
            key: String::new(),
            value_b64: None,
            importer: None,
            ts: now,
        };
        self.log(&entry)?;
        Ok(inner.gc(now))
    }

    /// Runs [`gc`](Self::gc) when at least one period has elapsed since the last run.
    pub fn maybe_gc(&self) -> Result<Option<usize>, StagingError> {
        let due = {
            let inner = self.lock();
            self.clock.now() - inner.last_gc >= self.gc_period
        };
        if due {
            self.gc().map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn get(&self, key: &StagingKey) -> Option<StagedRecord> {
        self.lock().records.get(&key.to_string()).cloned()
    }

    pub fn audit(&self) -> StoreAudit {
        let inner = self.lock();
        StoreAudit {
            unprocessed: inner.records.len() - inner.awaiting_gc.len(),
            awaiting_gc: inner.awaiting_gc.len(),
            deleted: inner.deleted,
            published: inner.published,
        }
    }

    /// Highest id published so far for a (streamer, src) sequence.
    pub fn last_id(&self, streamer: &str, src: &str) -> Option<u64> {
        self.lock()
            .last_id
            .get(&(streamer.to_string(), src.to_string()))
            .copied()
    }
}

fn register_op(direction: Direction) -> &'static str {
    match direction {
        Direction::Export => "register_export",
        Direction::Import => "register_import",
    }
}

fn importer_label(inner: &Inner, id: RegistrationId) -> String {
    format!("{}#{}", inner.registrations[id.0 as usize].process, id.0)
}

impl Inner {
    fn find_registration(
        &self,
        process: &str,
        direction: Direction,
        template: &KeyTemplate,
    ) -> Option<RegistrationId> {
        self.registrations
            .iter()
            .find(|r| r.process == process && r.direction == direction && &r.template == template)
            .map(|r| r.id)
    }

    fn register(&mut self, process: &str, direction: Direction, template: KeyTemplate) -> RegistrationId {
        let id = RegistrationId(self.registrations.len() as u32);
        self.registrations.push(Registration {
            id,
            process: process.to_string(),
            direction,
            template,
        });
        id
    }

    fn check_importer(&self, id: RegistrationId) -> Result<(), StagingError> {
        match self.registrations.get(id.0 as usize) {
            Some(r) if r.direction == Direction::Import => Ok(()),
            _ => Err(StagingError::UnknownImporter(id.0)),
        }
    }

    fn check_publish(&self, key: &StagingKey) -> Result<(), StagingError> {
        let text = key.to_string();
        if self.records.contains_key(&text) {
            return Err(StagingError::DuplicateKey(text));
        }
        if let Some(&last) = self.last_id.get(&key.sequence()) {
            if key.id <= last {
                return Err(StagingError::NonIncreasingId { key: text, last });
            }
        }
        Ok(())
    }

    fn publish(&mut self, key: StagingKey, value: Vec<u8>) -> RecordStatus {
        let pending: BTreeSet<RegistrationId> = self
            .registrations
            .iter()
            .filter(|r| r.direction == Direction::Import && r.template.matches(&key))
            .map(|r| r.id)
            .collect();
        let text = key.to_string();
        let status = if pending.is_empty() {
            self.awaiting_gc.insert(text.clone());
            RecordStatus::Processed
        } else {
            RecordStatus::Unprocessed
        };
        for id in &pending {
            self.pending.entry(*id).or_default().insert((key.id, text.clone()));
        }
        self.last_id.insert(key.sequence(), key.id);
        self.published += 1;
        self.records.insert(
            text,
            StagedRecord {
                key,
                value,
                status,
                pending_importers: pending,
            },
        );
        status
    }

    fn check_ack(&self, importer: RegistrationId, key: &str) -> Result<(), StagingError> {
        let record = self
            .records
            .get(key)
            .ok_or_else(|| StagingError::UnknownKey(key.to_string()))?;
        if !record.pending_importers.contains(&importer) {
            return Err(StagingError::NotPending {
                key: key.to_string(),
                importer: importer.0,
            });
        }
        Ok(())
    }

    fn ack(&mut self, importer: RegistrationId, key: &str) -> RecordStatus {
        let record = self.records.get_mut(key).expect("checked by check_ack");
        record.pending_importers.remove(&importer);
        if let Some(set) = self.pending.get_mut(&importer) {
            set.remove(&(record.key.id, key.to_string()));
        }
        if record.pending_importers.is_empty() {
            record.status = RecordStatus::Processed;
            self.awaiting_gc.insert(key.to_string());
        }
        record.status
    }

    fn gc(&mut self, now: i64) -> usize {
        let doomed = std::mem::take(&mut self.awaiting_gc);
        for key in &doomed {
            let removed = self.records.remove(key);
            debug_assert!(matches!(removed, Some(r) if r.status == RecordStatus::Processed));
        }
        self.deleted += doomed.len() as u64;
        self.last_gc = now;
        doomed.len()
    }

    fn replay(&mut self, entry: JournalEntry) -> Result<(), StagingError> {
        let corrupt = |reason: String| StagingError::CorruptJournal(reason);
        match entry.op.as_str() {
            "register_import" | "register_export" => {
                let direction = if entry.op == "register_import" {
                    Direction::Import
                } else {
                    Direction::Export
                };
                let template = KeyTemplate::parse(&entry.key)?;
                let process = entry.importer.ok_or_else(|| corrupt("register without process".into()))?;
                if self.find_registration(&process, direction, &template).is_none() {
                    self.register(&process, direction, template);
                }
            }
            "publish" => {
                let key: StagingKey = entry.key.parse()?;
                let value = B64
                    .decode(entry.value_b64.unwrap_or_default())
                    .map_err(|e| corrupt(e.to_string()))?;
                self.check_publish(&key)?;
                self.publish(key, value);
            }
            "ack" => {
                let label = entry.importer.ok_or_else(|| corrupt("ack without importer".into()))?;
                let id = label
                    .rsplit_once('#')
                    .and_then(|(_, n)| n.parse::<u32>().ok())
                    .ok_or_else(|| corrupt(format!("bad importer label {label:?}")))?;
                let id = RegistrationId(id);
                self.check_importer(id)?;
                self.check_ack(id, &entry.key)?;
                self.ack(id, &entry.key);
            }
            "gc" => {
                self.gc(entry.ts);
            }
            other => return Err(corrupt(format!("unknown op {other:?}"))),
        }
        Ok(())
    }
}
