//! Joins confirmed physical events with social posts to produce training
//! labels.
//!
//! A post joins an event when it falls in the event's time (or space-time)
//! window, contains a topic keyword, shares the event's grid cell (unless
//! disabled) and satisfies the configured join method.

mod join;
mod label;
mod similarity;
mod spec;

pub use join::{
    has_keyword, in_window, join, join_all, location_similarity, pair_matches, select_window, JoinEvent,
    JoinOutput,
};
pub use label::{label_stream, Evidence, Label, LabelOutput, LabeledPost};
pub use similarity::{edit_distance, jaccard, levenshtein_ratio, similarity_tokens};
pub use spec::{JoinMethod, JoinSpec, SimFn, Window, DEFAULT_KEYWORDS, EVENT_FIELDS, POST_FIELDS};

#[derive(Debug, thiserror::Error)]
pub enum HdiError {
    #[error("invalid join spec: {0}")]
    InvalidSpec(String),
}
