use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::rules::{PhysicalEvent, RuleId};
use super::HcError;
use crate::geo::{haversine_km, LatLon};
use crate::ingest::HcRecord;
use crate::staging::Journal;

pub type RowId = u64;

/// Events closer than this (same rule, within the time gap) are one row.
const DEDUP_KM: f64 = 1.0;
const DEDUP_SECONDS: i64 = 3600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub lat: f64,
    pub lon: f64,
    pub event_time: i64,
    pub source: String,
    pub url: Option<String>,
    pub rule: RuleId,
    pub event_obj_b64: String,
}

impl EventRow {
    pub fn from_event(event: &PhysicalEvent, rule: RuleId) -> Self {
        let obj = serde_json::to_vec(&event.records).expect("records serialize");
        EventRow {
            lat: event.location.lat,
            lon: event.location.lon,
            event_time: event.event_time,
            source: event.source.clone(),
            url: event.url.clone(),
            rule,
            event_obj_b64: B64.encode(obj),
        }
    }

    pub fn location(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }

    pub fn records(&self) -> Result<Vec<HcRecord>, HcError> {
        let bytes = B64
            .decode(&self.event_obj_b64)
            .map_err(|e| HcError::Table(format!("event_obj_b64: {e}")))?;
        serde_json::from_slice(&bytes).map_err(|e| HcError::Table(format!("event_obj: {e}")))
    }

    pub fn event(&self) -> Result<PhysicalEvent, HcError> {
        Ok(PhysicalEvent {
            location: self.location(),
            event_time: self.event_time,
            source: self.source.clone(),
            url: self.url.clone(),
            records: self.records()?,
        })
    }

    fn duplicates(&self, other: &EventRow) -> bool {
        self.rule == other.rule
            && (self.event_time - other.event_time).abs() < DEDUP_SECONDS
            && haversine_km(self.location(), other.location()) <= DEDUP_KM
    }
}

/// The physical-event table, optionally backed by a JSON-lines file.
#[derive(Debug, Default)]
pub struct EventTable {
    rows: Vec<EventRow>,
    journal: Option<Journal>,
}

impl EventTable {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(path: &Path) -> Result<Self, HcError> {
        let (journal, rows) = Journal::open::<EventRow>(path)?;
        Ok(EventTable { rows, journal: Some(journal) })
    }

    /// Appends the event, or returns the id of the row it duplicates.
    pub fn persist(&mut self, event: &PhysicalEvent, rule: RuleId) -> Result<(RowId, bool), HcError> {
        let row = EventRow::from_event(event, rule);
        if !row.location().is_valid() {
            return Err(HcError::Table(format!("invalid location {:?}", row.location())));
        }
        if let Some(id) = self.rows.iter().position(|r| r.duplicates(&row)) {
            return Ok((id as RowId, false));
        }
        if let Some(journal) = self.journal.as_mut() {
            journal.append(&row)?;
        }
        self.rows.push(row);
        Ok(((self.rows.len() - 1) as RowId, true))
    }

    pub fn get(&self, id: RowId) -> Option<&EventRow> {
        self.rows.get(id as usize)
    }

    pub fn rows(&self) -> &[EventRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}
