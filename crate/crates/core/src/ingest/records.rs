use serde::{Deserialize, Serialize};

use crate::geo::LatLon;
use crate::metadata::GridCell;

/// A social post after streamer-level extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialPost {
    pub id: String,
    pub text: String,
    /// Named locations (or `"lat,lon"` geotags) found so far; often empty.
    #[serde(default)]
    pub locations: Vec<String>,
    pub timestamp: i64,
    #[serde(default)]
    pub links: Vec<String>,
    pub user: String,
    pub src: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<GridCell>,
}

/// A social record as delivered by a source API or replay file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawSocialRecord {
    pub id: String,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub created_at: Option<i64>,
    #[serde(default)]
    pub user: Option<String>,
    #[serde(default)]
    pub links: Vec<String>,
    #[serde(default)]
    pub geo: Option<[f64; 2]>,
    #[serde(default = "default_src")]
    pub src: String,
    #[serde(default)]
    pub lang: Option<String>,
    #[serde(default)]
    pub url: Option<String>,
}

fn default_src() -> String {
    "Twitter".to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HcKind {
    Rain,
    Quake,
    NoaaPrediction,
    News,
}

impl HcKind {
    /// Physical sensors publish under the `num` language field.
    pub fn is_numeric(self) -> bool {
        !matches!(self, HcKind::News)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HcLocation {
    Point { lat: f64, lon: f64 },
    Named { name: String },
}

/// A high-confidence record: a sensor reading, a prediction, or a news item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HcRecord {
    pub id: String,
    pub kind: HcKind,
    /// Rain in mm, quake magnitude, or landslide probability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Article title and summary for news.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub location: HcLocation,
    pub t: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<String>,
    pub agency: String,
}

impl HcRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.t <= 0 {
            return Err(format!("record {}: non-positive timestamp", self.id));
        }
        match self.kind {
            HcKind::NoaaPrediction => match self.value {
                Some(v) if (0.0..=1.0).contains(&v) => Ok(()),
                other => Err(format!("record {}: prediction {other:?} outside [0,1]", self.id)),
            },
            HcKind::Quake | HcKind::Rain => match self.value {
                Some(v) if v >= 0.0 && v.is_finite() => Ok(()),
                other => Err(format!("record {}: reading {other:?} must be >= 0", self.id)),
            },
            HcKind::News => match &self.summary {
                Some(s) if !s.trim().is_empty() => Ok(()),
                _ => Err(format!("record {}: news without summary", self.id)),
            },
        }
    }

    pub fn point(&self) -> Option<LatLon> {
        match self.location {
            HcLocation::Point { lat, lon } => Some(LatLon::new(lat, lon)),
            HcLocation::Named { .. } => None,
        }
    }
}

/// A raw social record the streamer refused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    pub src: String,
    /// Logical time the streamer saw the record (last accepted timestamp).
    pub seen_at: i64,
    pub reason: String,
}

/// Streamer-side extraction of the post tuple from a raw record.
///
/// Requires non-blank text and a positive timestamp. Explicit geotags become
/// a `"lat,lon"` location string; nothing else is inferred here.
pub fn trivial_metadata(raw: &RawSocialRecord) -> Result<SocialPost, String> {
    let text = match raw.text.as_deref().map(str::trim) {
        Some(t) if !t.is_empty() => t.to_string(),
        _ => return Err("missing text".into()),
    };
    let timestamp = match raw.created_at {
        Some(t) if t > 0 => t,
        _ => return Err("missing timestamp".into()),
    };
    let locations = raw
        .geo
        .map(|[lat, lon]| vec![format!("{lat},{lon}")])
        .unwrap_or_default();
    Ok(SocialPost {
        id: raw.id.clone(),
        text,
        locations,
        timestamp,
        links: raw.links.clone(),
        user: raw.user.clone().unwrap_or_default(),
        src: raw.src.clone(),
        url: raw.url.clone(),
        cell: None,
    })
}
