//! Relevance filters for social posts: text encoding, linear ensembles,
//! the filter store, drift monitoring, update scheduling and diagnostics.

mod diag;
mod drift;
mod encoder;
mod ensemble;
mod fstore;
mod linear;
mod metrics;
mod schedule;

pub use diag::{drift_diagnostic, Diagnostic, Pca};
pub use drift::{margin_density, DriftMonitor, DriftStatus, MonitorConfig};
pub use encoder::{dot, normalize, EmbeddingEncoder, HashingEncoder, TextEncoder, DEFAULT_DIMS};
pub use ensemble::{
    cap_negatives, default_members, expert_weights, model_weights, stratified_split, train_filter, EnsembleFilter,
    MemberSpec, Scheme,
};
pub use fstore::{decode_weights, encode_weights, squared_distance, FStore, FStoreEntry, Query, TrainSignature};
pub use linear::{
    class_balanced, objective, sample_gradient, sample_objective, sigmoid, train_sgd, Algo, LinearFilter, Sample,
    SgdConfig, TrainRun,
};
pub use metrics::Confusion;
pub use schedule::{schedule_tick, Action, ScheduleMode, ScheduleState};

#[derive(Debug, thiserror::Error)]
pub enum MlError {
    #[error("training data has a single class")]
    SingleClass,
    #[error("no samples")]
    NoSamples,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("filter store is empty")]
    EmptyStore,
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("corrupt filter store: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
