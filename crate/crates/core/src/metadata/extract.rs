use std::collections::{BTreeMap, HashSet};

use super::gazetteer::Gazetteer;
use super::grid::{map_to_cell, GridCell};
use super::MetadataError;
use crate::ingest::SocialPost;
use crate::staging::{ExtendPolicy, MetadataEntry, MetadataKind, MetadataStore, DAY};

/// TTL given to locations found by NER, and the extension applied to
/// substring hits whose remaining TTL is below it.
pub const LOCATION_TTL: i64 = 2 * DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Consult the metadata store for substring matches.
    pub augment: bool,
    pub ttl: i64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { augment: true, ttl: LOCATION_TTL }
    }
}

/// Finds location strings in a post's text.
///
/// Gazetteer NER hits come first in text order, followed by metadata-store
/// values found as substrings of the text. NER hits are published to the
/// store; substring hits get their TTL extended when it is running low.
pub fn extract_locations(
    post: &SocialPost,
    gazetteer: &Gazetteer,
    mstore: &MetadataStore,
    options: ExtractOptions,
) -> Result<Vec<String>, MetadataError> {
    let now = mstore.now();
    let mut seen = HashSet::new();
    let mut found = Vec::new();
    for name in gazetteer.find_mentions(&post.text) {
        if seen.insert(name.to_lowercase()) {
            found.push(name.to_string());
        }
    }
    for name in &found {
        mstore.put(
            MetadataEntry::new(MetadataKind::LocationString, name.clone(), now + options.ttl),
            ExtendPolicy::ExtendIfBelow(options.ttl),
        )?;
    }
    if options.augment {
        let lowered = post.text.to_lowercase();
        let mut hits: Vec<(usize, MetadataEntry)> = mstore
            .lookup_substrings(&post.text, now)
            .into_iter()
            .map(|e| (lowered.find(&e.value.to_lowercase()).unwrap_or(usize::MAX), e))
            .collect();
        hits.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.value.cmp(&b.1.value)));
        for (_, entry) in hits {
            mstore.put(
                MetadataEntry::new(entry.kind, entry.value.clone(), now + options.ttl),
                ExtendPolicy::ExtendIfBelow(options.ttl),
            )?;
            if seen.insert(entry.value.to_lowercase()) {
                found.push(entry.value);
            }
        }
    }
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Resolution {
    pub cell: Option<GridCell>,
    /// Location candidates that could not be geocoded.
    pub dropped: usize,
}

/// Picks the grid cell holding the most of a post's geocoded locations.
///
/// Ties go to the cell whose location is mentioned earliest in the text;
/// locations that do not occur literally in the text rank after those that
/// do, in list order.
pub fn resolve_post_cell(post: &SocialPost, gazetteer: &Gazetteer) -> Resolution {
    let lowered = post.text.to_lowercase();
    let mut cells: BTreeMap<GridCell, (usize, (usize, usize))> = BTreeMap::new();
    let mut dropped = 0;
    for (i, name) in post.locations.iter().enumerate() {
        let Ok(point) = gazetteer.geocode(name) else {
            dropped += 1;
            continue;
        };
        let Ok(cell) = map_to_cell(point.lat, point.lon) else {
            dropped += 1;
            continue;
        };
        let rank = (lowered.find(&name.to_lowercase()).unwrap_or(usize::MAX), i);
        let slot = cells.entry(cell).or_insert((0, rank));
        slot.0 += 1;
        slot.1 = slot.1.min(rank);
    }
    let cell = cells
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then_with(|| b.1 .1.cmp(&a.1 .1)))
        .map(|(cell, _)| cell);
    Resolution { cell, dropped }
}
