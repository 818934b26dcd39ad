use serde::{Deserialize, Serialize};

use super::SynthError;

/// A pool of tokens that together express one signal. The first token is the
/// signal's keyword and appears in every post drawn from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub name: String,
    pub tokens: Vec<String>,
}

impl Signal {
    pub fn new(name: &str, tokens: &[&str]) -> Self {
        Signal { name: name.into(), tokens: tokens.iter().map(|t| t.to_string()).collect() }
    }

    pub fn keyword(&self) -> &str {
        &self.tokens[0]
    }
}

/// New mixture coefficients from a window on (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftStep {
    pub window: usize,
    pub coeffs: Vec<f64>,
}

/// An event type as a mixture of signals whose coefficients change over
/// time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalProfile {
    pub signals: Vec<Signal>,
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub drift_plan: Vec<DriftStep>,
}

fn check_mixture(coeffs: &[f64], n: usize, what: &str) -> Result<(), SynthError> {
    if coeffs.len() != n {
        return Err(SynthError::InvalidPlan(format!("{what}: {} coefficients for {n} signals", coeffs.len())));
    }
    if coeffs.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
        return Err(SynthError::InvalidPlan(format!("{what}: coefficients must be finite and >= 0")));
    }
    let sum: f64 = coeffs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SynthError::InvalidPlan(format!("{what}: coefficients sum to {sum}, not 1")));
    }
    Ok(())
}

impl SignalProfile {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.signals.is_empty() || self.signals.iter().any(|s| s.tokens.is_empty()) {
            return Err(SynthError::InvalidPlan("every signal needs at least a keyword".into()));
        }
        check_mixture(&self.coeffs, self.signals.len(), "initial mixture")?;
        let mut last = 0;
        for step in &self.drift_plan {
            if step.window <= last {
                return Err(SynthError::InvalidPlan(format!(
                    "drift windows must be strictly increasing and >= 1, got {} after {last}",
                    step.window
                )));
            }
            last = step.window;
            check_mixture(&step.coeffs, self.signals.len(), &format!("drift at window {}", step.window))?;
        }
        Ok(())
    }

    /// Coefficients in effect during 1-based `window`.
    pub fn coeffs_at(&self, window: usize) -> &[f64] {
        self.drift_plan
            .iter()
            .rev()
            .find(|s| s.window <= window)
            .map_or(&self.coeffs, |s| &s.coeffs)
    }
}

/// Disaster reports: slope failures, monsoon mudslides, quake rockslides.
pub fn disaster_signals() -> Vec<Signal> {
    vec![
        Signal::new("slope", &[
            "landslide", "buried", "homes", "village", "collapsed", "slope", "rescue", "debris", "killed",
            "missing", "embankment", "search", "residents", "trapped", "soil", "bodies",
        ]),
        Signal::new("monsoon", &[
            "mudslide", "heavy", "rains", "flooding", "mud", "swept", "river", "monsoon", "downpour",
            "evacuated", "washed", "torrent", "villagers", "flash", "drenched", "overflow",
        ]),
        Signal::new("quake", &[
            "rockslide", "earthquake", "tremor", "boulders", "cliff", "rocks", "fell", "highway", "aftershock",
            "quake", "shaking", "magnitude", "blocked", "crews", "mountain", "pass",
        ]),
    ]
}

/// Other uses of the keyword: elections, the song, sports and markets, and
/// figurative political coverage that borrows disaster verbs.
pub fn confuser_signals() -> Vec<Signal> {
    vec![
        Signal::new("election", &[
            "landslide", "election", "victory", "votes", "party", "won", "candidate", "polls", "majority",
            "campaign", "voters", "results", "winning", "conservative", "ballots", "count",
        ]),
        Signal::new("song", &[
            "landslide", "song", "fleetwood", "mac", "cover", "stevie", "nicks", "listening", "album", "lyrics",
            "playlist", "acoustic", "guitar", "concert", "classic", "tune",
        ]),
        Signal::new("sports", &[
            "landslide", "win", "team", "score", "season", "market", "stocks", "points", "game", "fans",
            "rally", "crushed", "defeat", "league", "shares", "trading",
        ]),
        Signal::new("figurative", &[
            "landslide", "buried", "parliament", "swept", "coalition", "referendum", "senate", "collapsed",
            "mandate", "ruling", "opposition", "seats", "reform", "minister", "bill", "turnout",
        ]),
    ]
}

/// Default profiles. With `drift_at`, relevant posts move from slope reports
/// to quake rockslides and the figurative confusers surge from that window.
pub fn default_profiles(drift_at: Option<usize>) -> (SignalProfile, SignalProfile) {
    let step = |coeffs: Vec<f64>| drift_at.map(|window| DriftStep { window, coeffs }).into_iter().collect();
    let relevant = SignalProfile {
        signals: disaster_signals(),
        coeffs: vec![0.8, 0.2, 0.0],
        drift_plan: step(vec![0.05, 0.25, 0.7]),
    };
    let confusers = SignalProfile {
        signals: confuser_signals(),
        coeffs: vec![0.4, 0.3, 0.3, 0.0],
        drift_plan: step(vec![0.15, 0.1, 0.1, 0.65]),
    };
    (relevant, confusers)
}
