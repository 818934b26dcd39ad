use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::similarity::{jaccard, levenshtein_ratio};
use super::HdiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimFn {
    Jaccard,
    LevenshteinRatio,
}

impl SimFn {
    pub fn eval(self, a: &str, b: &str) -> f64 {
        match self {
            SimFn::Jaccard => jaccard(a, b),
            SimFn::LevenshteinRatio => levenshtein_ratio(a, b),
        }
    }
}

/// Attributes a post exposes to joins.
pub const POST_FIELDS: [&str; 3] = ["cell", "date", "location"];
/// Attributes an event exposes to joins.
pub const EVENT_FIELDS: [&str; 3] = ["cell", "date", "location_name"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JoinMethod {
    /// Equality on declared `post field -> event field` pairs.
    SchemaMatch { mapping: BTreeMap<String, String> },
    /// Best similarity between a post location string and the event
    /// location name must exceed `threshold`.
    StringSimilarity {
        function: SimFn,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    /// Equality on attributes that posts and events share by name.
    Natural {
        #[serde(default = "default_natural")]
        attributes: Vec<String>,
    },
}

fn default_threshold() -> f64 {
    0.5
}

fn default_natural() -> Vec<String> {
    vec!["cell".into(), "date".into()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Window {
    /// Posts in `[event_time - days_before, event_time + days_after]`.
    User { days_before: f64, days_after: f64 },
    /// Posts within `dist_km` of the event and `dt_seconds` of its time.
    Data { dist_km: f64, dt_seconds: i64 },
}

impl Default for Window {
    fn default() -> Self {
        Window::User { days_before: 3.0, days_after: 3.0 }
    }
}

pub const DEFAULT_KEYWORDS: [&str; 6] =
    ["landslide", "landslides", "mudslide", "mudslides", "rockslide", "rockslides"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JoinSpec {
    pub method: JoinMethod,
    #[serde(default)]
    pub window: Window,
    /// Require the post and event to share a grid cell.
    #[serde(default = "yes")]
    pub require_cell: bool,
    /// The post must contain one of these tokens; empty disables the check.
    #[serde(default = "default_keywords")]
    pub keywords: Vec<String>,
}

fn yes() -> bool {
    true
}

fn default_keywords() -> Vec<String> {
    DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect()
}

impl Default for JoinSpec {
    fn default() -> Self {
        JoinSpec {
            method: JoinMethod::StringSimilarity { function: SimFn::Jaccard, threshold: default_threshold() },
            window: Window::default(),
            require_cell: true,
            keywords: default_keywords(),
        }
    }
}

impl JoinSpec {
    pub fn validate(&self) -> Result<(), HdiError> {
        let bad = |m: String| Err(HdiError::InvalidSpec(m));
        match &self.method {
            JoinMethod::SchemaMatch { mapping } => {
                if mapping.is_empty() {
                    return bad("schema_match needs at least one mapped field".into());
                }
                for (post, event) in mapping {
                    if !POST_FIELDS.contains(&post.as_str()) {
                        return bad(format!("unmapped post field {post:?}"));
                    }
                    if !EVENT_FIELDS.contains(&event.as_str()) {
                        return bad(format!("unmapped event field {event:?}"));
                    }
                    let kinds = [field_kind(post), field_kind(event)];
                    if kinds[0] != kinds[1] {
                        return bad(format!("{post} and {event} have different types"));
                    }
                }
            }
            JoinMethod::StringSimilarity { threshold, .. } => {
                if !(*threshold > 0.0 && *threshold <= 1.0) {
                    return bad(format!("threshold {threshold} outside (0, 1]"));
                }
            }
            JoinMethod::Natural { attributes } => {
                if attributes.is_empty() {
                    return bad("natural join needs at least one attribute".into());
                }
                for a in attributes {
                    if !(POST_FIELDS.contains(&a.as_str()) && EVENT_FIELDS.contains(&a.as_str())) {
                        return bad(format!("{a:?} is not shared by posts and events"));
                    }
                }
            }
        }
        match self.window {
            Window::User { days_before, days_after } => {
                if !(days_before >= 0.0 && days_after >= 0.0 && days_before.is_finite() && days_after.is_finite()) {
                    return bad("window days must be finite and >= 0".into());
                }
            }
            Window::Data { dist_km, dt_seconds } => {
                if !(dist_km > 0.0 && dist_km.is_finite()) || dt_seconds < 0 {
                    return bad("data window needs dist_km > 0 and dt_seconds >= 0".into());
                }
            }
        }
        Ok(())
    }

    /// Whether matching pairs must share a cell, through the flag or the method.
    pub fn cell_blocked(&self) -> bool {
        self.require_cell
            || match &self.method {
                JoinMethod::SchemaMatch { mapping } => mapping.get("cell").map(String::as_str) == Some("cell"),
                JoinMethod::Natural { attributes } => attributes.iter().any(|a| a == "cell"),
                JoinMethod::StringSimilarity { .. } => false,
            }
    }
}

fn field_kind(name: &str) -> &'static str {
    match name {
        "cell" => "cell",
        "date" => "date",
        _ => "text",
    }
}
