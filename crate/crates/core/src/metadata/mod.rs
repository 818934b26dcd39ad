//! Location extraction, geocoding and grid-cell assignment for posts.

mod extract;
mod gazetteer;
mod grid;

pub use extract::{extract_locations, resolve_post_cell, ExtractOptions, Resolution, LOCATION_TTL};
pub use gazetteer::{tokenize, Gazetteer, Place, BUNDLED_GAZETTEER};
pub use grid::{map_to_cell, GridCell, CELLS_PER_DEGREE, COLS, ROWS};

use crate::staging::StagingError;

#[derive(Debug, thiserror::Error)]
pub enum MetadataError {
    #[error("coordinate ({lat}, {lon}) out of range")]
    OutOfRange { lat: f64, lon: f64 },
    #[error("unknown place {0:?}")]
    UnknownPlace(String),
    #[error("gazetteer: {0}")]
    Gazetteer(String),
    #[error(transparent)]
    Store(#[from] StagingError),
}
