//! Rule-based physical event identification over high-confidence records.
//!
//! Records are clustered by great-circle proximity, the four event rules are
//! evaluated per cluster, full matches are persisted to the event table and
//! every full or partial match location is shared through the metadata store.
//!
//! The event table is a JSON-lines file, one row per event, row id = line
//! number starting at 0:
//!
//! ```text
//! {"lat":20.146,"lon":92.898,"event_time":1550244443,"source":"noaa","url":null,"rule":1,"event_obj_b64":"W3si..."}
//! ```
//!
//! `event_obj_b64` is base64 of the JSON array of triggering records.

mod config;
mod rules;
mod share;
mod table;

pub use config::{Rule1Grouping, RuleConfig};
pub use rules::{
    cluster_records, detect, evaluate_rules, locate, Detection, LocatedRecord, MatchKind,
    PhysicalEvent, RuleId, RuleMatch,
};
pub use share::{location_name, share_locations, ShareReport, EVENT_LOCATION_TTL};
pub use table::{EventRow, EventTable, RowId};

use crate::staging::StagingError;

#[derive(Debug, thiserror::Error)]
pub enum HcError {
    #[error("invalid rule config: {0}")]
    InvalidConfig(String),
    #[error("event table: {0}")]
    Table(String),
    #[error(transparent)]
    Store(#[from] StagingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
