//! Streamers that turn replay files into staged records.
//!
//! Social input (`--role social`) is one JSON object per line:
//!
//! ```text
//! {"id":"p1","text":"landslide near Sittwe","created_at":1550244443,"user":"@a",
//!  "links":[],"geo":null,"src":"Twitter","lang":"en","url":"https://..."}
//! ```
//!
//! High-confidence input (`--role high_confidence`):
//!
//! ```text
//! {"id":"n1","kind":"noaa_prediction","value":0.75,"location":{"name":"Sittwe"},"t":1550244443,"agency":"noaa"}
//! {"id":"r1","kind":"rain","value":14.2,"location":{"lat":20.1,"lon":92.9},"t":1550300000,"agency":"usgs"}
//! {"id":"a1","kind":"news","summary":"...","tags":["landslide"],"location":{"name":"Sittwe"},"t":1550400000,"link":"https://...","agency":"news"}
//! ```

mod records;
mod streamer;

pub use records::{
    trivial_metadata, HcKind, HcLocation, HcRecord, RawSocialRecord, RejectedRecord, SocialPost,
};
pub use streamer::{
    stream_from_file, FileStreamer, Role, StreamEvent, StreamStats, Streamer, REJECTS_STREAMER,
};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("i/o error at {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("line {line}: timestamp {found} precedes {previous}")]
    Unsorted { line: usize, previous: i64, found: i64 },
}
