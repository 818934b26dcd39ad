//! Synthetic social and sensor streams with planted events, ground truth and
//! scheduled drift.
//!
//! Relevant posts express a mixture of disaster signals; irrelevant posts a
//! mixture of confuser signals that reuse the keyword. A drift plan changes
//! either mixture from a given window on. Words are drawn from a bigram model
//! conditioned on the previous word, the author's user group and the place.

mod generate;
mod lm;
mod profile;
mod truth;

pub use generate::{
    event_places, generate, Evidence, MentionRates, PlantedEvent, SeedLabel, SynthConfig, SynthOutput, TruthLabel,
    TruthRow, EVENTS_FILE, HC_FILE, SEED_LABELS_FILE, SOCIAL_FILE, TRUTH_FILE,
};
pub use lm::{Context, SynthLanguageModel, FILLER, LOCATION_GROUPS, USER_FILLER_MASS};
pub use profile::{confuser_signals, default_profiles, disaster_signals, DriftStep, Signal, SignalProfile};
pub use truth::{truth_index, truth_metrics};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid generator plan: {0}")]
    InvalidPlan(String),
    #[error("unknown post id {0}")]
    UnknownId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
