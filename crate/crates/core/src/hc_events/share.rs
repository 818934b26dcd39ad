use super::config::RuleConfig;
use super::rules::{MatchKind, PhysicalEvent, RuleMatch};
use super::table::{EventTable, RowId};
use super::HcError;
use crate::ingest::HcLocation;
use crate::metadata::Gazetteer;
use crate::staging::{ExtendPolicy, MetadataEntry, MetadataKind, MetadataStore, DAY};

pub const EVENT_LOCATION_TTL: i64 = 7 * DAY;

/// The string shared for an event location: the first named location among
/// its records, else the nearest gazetteer place within `radius_km`, else
/// `"lat,lon"`.
pub fn location_name(event: &PhysicalEvent, gazetteer: &Gazetteer, radius_km: f64) -> String {
    for record in &event.records {
        if let HcLocation::Named { name } = &record.location {
            if let Some(place) = gazetteer.place(name) {
                return place.name.clone();
            }
        }
    }
    match gazetteer.nearest(event.location, radius_km) {
        Some(place) => place.name.clone(),
        None => format!("{:.4},{:.4}", event.location.lat, event.location.lon),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShareReport {
    /// Locations written to the metadata store.
    pub shared: usize,
    /// Row ids of full matches, in match order.
    pub rows: Vec<RowId>,
    /// How many of those rows were new.
    pub new_rows: usize,
}

/// Persists full matches and shares every match location for a week.
pub fn share_locations(
    matches: &[RuleMatch],
    gazetteer: &Gazetteer,
    mstore: &MetadataStore,
    table: &mut EventTable,
    config: &RuleConfig,
) -> Result<ShareReport, HcError> {
    let mut report = ShareReport::default();
    let expires = mstore.now() + EVENT_LOCATION_TTL;
    for m in matches {
        if m.kind == MatchKind::Full {
            let (id, new) = table.persist(&m.event, m.rule)?;
            report.rows.push(id);
            report.new_rows += new as usize;
        }
        let name = location_name(&m.event, gazetteer, config.name_radius_km);
        mstore.put(MetadataEntry::new(MetadataKind::EventLocation, name, expires), ExtendPolicy::Overwrite)?;
        report.shared += 1;
    }
    Ok(report)
}
