use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::HcError;

/// How the prediction rule's disjunction is grouped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule1Grouping {
    /// `prediction AND (rain after prediction OR (quake near prediction AND rain after quake))`.
    #[default]
    PredictionAnchored,
    /// `(prediction AND rain after it) OR (minor quake AND rain after it)`.
    EitherAnchor,
}

/// Thresholds and windows for the event rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConfig {
    pub noaa_high: f64,
    pub noaa_low: f64,
    pub quake_minor: f64,
    pub quake_major: f64,
    pub quake_severe: f64,
    pub rain_lookahead_days: f64,
    /// Rain readings must exceed this many mm to count.
    pub rain_min_mm: f64,
    /// Max gap between a minor quake and the prediction it backs up.
    pub quake_prediction_days: f64,
    /// Max gap between a major quake and the low-threshold prediction.
    pub major_quake_prediction_days: f64,
    pub proximity_km: f64,
    pub news_tags: BTreeSet<String>,
    pub rule1_grouping: Rule1Grouping,
    /// Radius for naming an event location after a gazetteer place.
    pub name_radius_km: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            noaa_high: 0.70,
            noaa_low: 0.30,
            quake_minor: 3.0,
            quake_major: 6.0,
            quake_severe: 7.0,
            rain_lookahead_days: 3.0,
            rain_min_mm: 0.0,
            quake_prediction_days: 1.0,
            major_quake_prediction_days: 3.0,
            proximity_km: 50.0,
            news_tags: ["landslide", "mudslide"].iter().map(|s| s.to_string()).collect(),
            rule1_grouping: Rule1Grouping::default(),
            name_radius_km: 10.0,
        }
    }
}

impl RuleConfig {
    pub fn from_toml(text: &str) -> Result<Self, HcError> {
        let config: RuleConfig =
            toml::from_str(text).map_err(|e| HcError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HcError> {
        let bad = |m: &str| Err(HcError::InvalidConfig(m.to_string()));
        if !(0.0 <= self.noaa_low && self.noaa_low < self.noaa_high && self.noaa_high <= 1.0) {
            return bad("need 0 <= noaa_low < noaa_high <= 1");
        }
        if !(self.quake_minor < self.quake_major && self.quake_major < self.quake_severe) {
            return bad("need quake_minor < quake_major < quake_severe");
        }
        for (name, v) in [
            ("rain_lookahead_days", self.rain_lookahead_days),
            ("quake_prediction_days", self.quake_prediction_days),
            ("major_quake_prediction_days", self.major_quake_prediction_days),
            ("rain_min_mm", self.rain_min_mm),
            ("name_radius_km", self.name_radius_km),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(HcError::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        if !(self.proximity_km > 0.0 && self.proximity_km.is_finite()) {
            return bad("proximity_km must be positive");
        }
        Ok(())
    }

    pub(crate) fn days(d: f64) -> i64 {
        (d * 86_400.0).round() as i64
    }

    pub(crate) fn is_news_tag(&self, tag: &str) -> bool {
        let tag = tag.to_lowercase();
        self.news_tags.iter().any(|t| t.to_lowercase() == tag)
    }
}
