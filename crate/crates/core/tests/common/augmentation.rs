//! Location resolution over a post corpus with and without metadata-store
//! augmentation.

use std::sync::Arc;

use driftwatch::ingest::{trivial_metadata, RawSocialRecord};
use driftwatch::metadata::{extract_locations, resolve_post_cell, ExtractOptions, Gazetteer};
use driftwatch::staging::{ManualClock, MetadataStore};

/// Posts (in timestamp order) whose cell resolves. Records the streamer
/// would reject are skipped.
pub fn resolved(corpus: &[RawSocialRecord], gazetteer: &Gazetteer, augment: bool) -> usize {
    let clock = Arc::new(ManualClock::new(0));
    let mstore = MetadataStore::in_memory(clock.clone());
    let options = ExtractOptions { augment, ..ExtractOptions::default() };
    let mut n = 0;
    for raw in corpus {
        let Ok(mut post) = trivial_metadata(raw) else { continue };
        clock.set(post.timestamp);
        let found = extract_locations(&post, gazetteer, &mstore, options).unwrap();
        post.locations.extend(found);
        n += usize::from(resolve_post_cell(&post, gazetteer).cell.is_some());
    }
    n
}
