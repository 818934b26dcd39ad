//! Keyed staging store shared by every pipeline process, plus the
//! expiring metadata store used to pass location hints between processes.
//!
//! Processes export records under a 7-field key
//! (`streamer:lang:topic:src:url:id:timestamp`) and import them by
//! registering key templates. A record is `processed` once every importer
//! that matched it at publish time has acknowledged it; only processed
//! records are garbage collected.
//!
//! Persistence is an append-only journal of newline-delimited JSON:
//!
//! ```text
//! {"op":"register_import","key":"ss:*:*:*:*:*:*","importer":"metadata","ts":0}
//! {"op":"publish","key":"ss:en:landslides:Twitter:NULL:1:1550244443","value_b64":"...","ts":1550244443}
//! {"op":"ack","key":"ss:en:landslides:Twitter:NULL:1:1550244443","importer":"metadata#0","ts":1550244500}
//! {"op":"gc","key":"","ts":1550244560}
//! ```

mod clock;
mod journal;
mod key;
mod mstore;
mod store;

pub use clock::{Clock, ManualClock, SystemClock};
pub use journal::Journal;
pub use key::{FieldPattern, KeyTemplate, StagingKey, StreamerKind, KEY_FIELDS};
pub use mstore::{ExtendPolicy, MetadataEntry, MetadataKind, MetadataStore, DAY};
pub use store::{
    Direction, RecordStatus, Registration, RegistrationId, StagedRecord, StagingStore, StoreAudit,
    DEFAULT_GC_PERIOD,
};

#[derive(Debug, thiserror::Error)]
pub enum StagingError {
    #[error("key must have {KEY_FIELDS} colon-delimited fields, found {found}")]
    FieldCount { found: usize },
    #[error("malformed key field {index}: {reason}")]
    MalformedField { index: usize, reason: String },
    #[error("duplicate key {0}")]
    DuplicateKey(String),
    #[error("key {key} does not increase id past {last}")]
    NonIncreasingId { key: String, last: u64 },
    #[error("unknown importer registration {0}")]
    UnknownImporter(u32),
    #[error("unknown key {0}")]
    UnknownKey(String),
    #[error("key {key} is not pending for importer {importer}")]
    NotPending { key: String, importer: u32 },
    #[error("entry {value:?} expires at {expires_at}, not after now ({now})")]
    ExpiredEntry { value: String, expires_at: i64, now: i64 },
    #[error("corrupt journal: {0}")]
    CorruptJournal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
