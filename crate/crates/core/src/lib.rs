//! Drift-adaptive physical event detection from social posts and
//! high-confidence sensor feeds.

pub mod app;
pub mod geo;
pub mod hc_events;
pub mod hdi;
pub mod staging;
pub mod synth;
pub mod ingest;
pub mod metadata;
pub mod mlfilters;
