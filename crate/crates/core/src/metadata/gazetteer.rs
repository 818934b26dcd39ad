use std::collections::HashMap;
use std::path::Path;

use super::MetadataError;
use crate::geo::{haversine_km, LatLon};

/// The gazetteer bundled with the crate: `name<TAB>lat<TAB>lon`.
pub const BUNDLED_GAZETTEER: &str = include_str!("../../data/gazetteer.tsv");

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Place {
    pub name: String,
    pub point: LatLon,
}

/// Place-name table used for NER and geocoding.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    places: Vec<Place>,
    by_name: HashMap<String, usize>,
    by_tokens: HashMap<Vec<String>, usize>,
    max_tokens: usize,
}

impl Gazetteer {
    pub fn bundled() -> Self {
        Self::from_tsv(BUNDLED_GAZETTEER).expect("bundled gazetteer is valid")
    }

    pub fn load(path: &Path) -> Result<Self, MetadataError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MetadataError::Gazetteer(format!("{}: {e}", path.display())))?;
        Self::from_tsv(&text)
    }

    pub fn from_tsv(text: &str) -> Result<Self, MetadataError> {
        let mut places = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || MetadataError::Gazetteer(format!("line {}: {line:?}", i + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let lat: f64 = fields[1].trim().parse().map_err(|_| bad())?;
            let lon: f64 = fields[2].trim().parse().map_err(|_| bad())?;
            let point = LatLon::new(lat, lon);
            if !point.is_valid() {
                return Err(bad());
            }
            places.push(Place { name: fields[0].trim().to_string(), point });
        }
        Self::from_places(places)
    }

    pub fn from_places(places: Vec<Place>) -> Result<Self, MetadataError> {
        let mut g = Gazetteer::default();
        for place in places {
            let folded = place.name.to_lowercase();
            let tokens = tokenize(&place.name);
            if tokens.is_empty() {
                return Err(MetadataError::Gazetteer(format!("place {:?} has no tokens", place.name)));
            }
            if g.by_name.contains_key(&folded) || g.by_tokens.contains_key(&tokens) {
                return Err(MetadataError::Gazetteer(format!("duplicate place {:?}", place.name)));
            }
            let idx = g.places.len();
            g.max_tokens = g.max_tokens.max(tokens.len());
            g.by_name.insert(folded, idx);
            g.by_tokens.insert(tokens, idx);
            g.places.push(place);
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn place(&self, name: &str) -> Option<&Place> {
        self.by_name.get(&name.to_lowercase()).map(|&i| &self.places[i])
    }

    /// Case-folded exact lookup. A `"lat,lon"` string (a geotag) resolves to
    /// itself.
    pub fn geocode(&self, name: &str) -> Result<LatLon, MetadataError> {
        if let Some(point) = parse_coordinates(name) {
            return Ok(point);
        }
        self.place(name)
            .map(|p| p.point)
            .ok_or_else(|| MetadataError::UnknownPlace(name.to_string()))
    }

    /// Maximal token-sequence matches, left to right, as canonical names.
    pub fn find_mentions(&self, text: &str) -> Vec<&str> {
        let tokens = tokenize(text);
        let mut hits = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let longest = (1..=self.max_tokens.min(tokens.len() - i))
                .rev()
                .find_map(|n| self.by_tokens.get(&tokens[i..i + n]).map(|&idx| (n, idx)));
            match longest {
                Some((n, idx)) => {
                    hits.push(self.places[idx].name.as_str());
                    i += n;
                }
                None => i += 1,
            }
        }
        hits
    }

    /// Closest place within `max_km`, ties broken by table order.
    pub fn nearest(&self, point: LatLon, max_km: f64) -> Option<&Place> {
        let mut best: Option<(f64, &Place)> = None;
        for place in &self.places {
            let d = haversine_km(point, place.point);
            if d <= max_km && best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, place));
            }
        }
        best.map(|(_, p)| p)
    }
}

fn parse_coordinates(s: &str) -> Option<LatLon> {
    let (lat, lon) = s.split_once(',')?;
    let point = LatLon::new(lat.trim().parse().ok()?, lon.trim().parse().ok()?);
    point.is_valid().then_some(point)
}
