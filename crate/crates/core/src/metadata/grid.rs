use std::fmt;

use serde::{Deserialize, Serialize};

use super::MetadataError;
use crate::geo::LatLon;

/// Cells per degree: 60 / 2.5 arc-minutes.
pub const CELLS_PER_DEGREE: f64 = 24.0;
pub const ROWS: u32 = 180 * 24;
pub const COLS: u32 = 360 * 24;

/// A 2.5-arc-minute latitude/longitude bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCell {
    pub row: u32,
    pub col: u32,
}

impl GridCell {
    pub fn new(row: u32, col: u32) -> Option<Self> {
        (row < ROWS && col < COLS).then_some(GridCell { row, col })
    }

    pub fn center(&self) -> LatLon {
        LatLon::new(
            (self.row as f64 + 0.5) / CELLS_PER_DEGREE - 90.0,
            (self.col as f64 + 0.5) / CELLS_PER_DEGREE - 180.0,
        )
    }
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.row, self.col)
    }
}

/// Maps a coordinate to its cell; the north pole and the antimeridian clamp
/// into the last row and column.
pub fn map_to_cell(lat: f64, lon: f64) -> Result<GridCell, MetadataError> {
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(MetadataError::OutOfRange { lat, lon });
    }
    let row = (((lat + 90.0) * CELLS_PER_DEGREE).floor() as u32).min(ROWS - 1);
    let col = (((lon + 180.0) * CELLS_PER_DEGREE).floor() as u32).min(COLS - 1);
    Ok(GridCell { row, col })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        assert_eq!(map_to_cell(0.0, 0.0).unwrap(), GridCell { row: 2160, col: 4320 });
        assert_eq!(map_to_cell(-90.0, -180.0).unwrap(), GridCell { row: 0, col: 0 });
        // 0.05 * 24 = 1.2, floor offset 1
        assert_eq!(map_to_cell(0.05, 0.05).unwrap(), GridCell { row: 2161, col: 4321 });
        assert_eq!(map_to_cell(90.0, 180.0).unwrap(), GridCell { row: 4319, col: 8639 });
    }

    #[test]
    fn out_of_range() {
        assert!(map_to_cell(90.0001, 0.0).is_err());
        assert!(map_to_cell(0.0, -180.5).is_err());
        assert!(map_to_cell(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn center_round_trips_at_corners() {
        for (row, col) in [(0, 0), (ROWS - 1, COLS - 1), (0, COLS - 1), (ROWS - 1, 0)] {
            let cell = GridCell::new(row, col).unwrap();
            let c = cell.center();
            assert_eq!(map_to_cell(c.lat, c.lon).unwrap(), cell);
        }
    }
}
