use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::{trivial_metadata, HcRecord, RawSocialRecord, RejectedRecord};
use super::IngestError;
use crate::staging::{StagingKey, StreamerKind};

/// Streamer name used for keys of rejected social records.
pub const REJECTS_STREAMER: &str = "rejects";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Social,
    HighConfidence,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamEvent {
    Record { key: StagingKey, payload: Vec<u8> },
    Rejected { key: StagingKey, record: RejectedRecord },
}

impl StreamEvent {
    pub fn key(&self) -> &StagingKey {
        match self {
            StreamEvent::Record { key, .. } | StreamEvent::Rejected { key, .. } => key,
        }
    }

    /// The bytes to stage under [`key`](Self::key).
    pub fn payload(&self) -> Vec<u8> {
        match self {
            StreamEvent::Record { payload, .. } => payload.clone(),
            StreamEvent::Rejected { record, .. } => {
                serde_json::to_vec(record).expect("rejected record serializes")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StreamStats {
    pub accepted: u64,
    pub rejected: u64,
    pub malformed: u64,
}

/// Pull-based source of staged records.
pub trait Streamer {
    fn next_event(&mut self) -> Option<Result<StreamEvent, IngestError>>;
    fn stats(&self) -> StreamStats;
}

/// Replays a newline-delimited JSON file as a streamer.
///
/// Ids auto-increment from 1 per (streamer, src) sequence, so replaying the
/// same file yields identical keys. Lines that fail to parse are skipped and
/// counted; a timestamp lower than its predecessor stops the stream.
pub struct FileStreamer<R: BufRead> {
    lines: Lines<R>,
    line_no: usize,
    role: Role,
    topic: String,
    next_id: HashMap<(String, String), u64>,
    last_t: i64,
    stats: StreamStats,
    failed: bool,
}

impl FileStreamer<BufReader<File>> {
    pub fn open(path: &Path, role: Role, topic: &str) -> Result<Self, IngestError> {
        let file = File::open(path).map_err(|e| IngestError::Io(path.display().to_string(), e))?;
        Ok(Self::from_reader(BufReader::new(file), role, topic))
    }
}

impl<R: BufRead> FileStreamer<R> {
    pub fn from_reader(reader: R, role: Role, topic: &str) -> Self {
        FileStreamer {
            lines: reader.lines(),
            line_no: 0,
            role,
            topic: topic.to_string(),
            next_id: HashMap::new(),
            last_t: 0,
            stats: StreamStats::default(),
            failed: false,
        }
    }

    fn allocate_id(&mut self, streamer: &str, src: &str) -> u64 {
        let slot = self
            .next_id
            .entry((streamer.to_string(), src.to_string()))
            .or_insert(1);
        let id = *slot;
        *slot += 1;
        id
    }

    fn check_order(&mut self, t: i64) -> Result<(), IngestError> {
        if t < self.last_t {
            return Err(IngestError::Unsorted { line: self.line_no, previous: self.last_t, found: t });
        }
        self.last_t = t;
        Ok(())
    }

    fn social(&mut self, line: &str) -> Option<Result<StreamEvent, IngestError>> {
        let raw: RawSocialRecord = match serde_json::from_str(line) {
            Ok(raw) => raw,
            Err(_) => {
                self.stats.malformed += 1;
                return None;
            }
        };
        let lang = raw.lang.clone().unwrap_or_else(|| "en".to_string());
        match trivial_metadata(&raw) {
            Ok(post) => {
                if let Err(e) = self.check_order(post.timestamp) {
                    return Some(Err(e));
                }
                let id = self.allocate_id("ss", &post.src);
                let key = StagingKey::new(
                    StreamerKind::Social,
                    lang,
                    self.topic.clone(),
                    post.src.clone(),
                    post.url.clone(),
                    id,
                    post.timestamp,
                );
                self.stats.accepted += 1;
                let payload = serde_json::to_vec(&post).expect("post serializes");
                Some(Ok(StreamEvent::Record { key, payload }))
            }
            Err(reason) => {
                let id = self.allocate_id(REJECTS_STREAMER, &raw.src);
                let record = RejectedRecord {
                    id: raw.id.clone(),
                    text: raw.text.clone().filter(|t| !t.trim().is_empty()),
                    user: raw.user.clone(),
                    src: raw.src.clone(),
                    seen_at: self.last_t,
                    reason,
                };
                let key = StagingKey::new(
                    StreamerKind::Process(REJECTS_STREAMER.to_string()),
                    lang,
                    self.topic.clone(),
                    raw.src.clone(),
                    raw.url.clone(),
                    id,
                    self.last_t,
                );
                self.stats.rejected += 1;
                Some(Ok(StreamEvent::Rejected { key, record }))
            }
        }
    }

    fn high_confidence(&mut self, line: &str) -> Option<Result<StreamEvent, IngestError>> {
        let record: HcRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(_) => {
                self.stats.malformed += 1;
                return None;
            }
        };
        if record.validate().is_err() {
            self.stats.malformed += 1;
            return None;
        }
        if let Err(e) = self.check_order(record.t) {
            return Some(Err(e));
        }
        let id = self.allocate_id("rs", &record.agency);
        let lang = if record.kind.is_numeric() { "num" } else { "en" };
        let key = StagingKey::new(
            StreamerKind::Reputable,
            lang,
            self.topic.clone(),
            record.agency.clone(),
            record.link.clone(),
            id,
            record.t,
        );
        self.stats.accepted += 1;
        let payload = serde_json::to_vec(&record).expect("record serializes");
        Some(Ok(StreamEvent::Record { key, payload }))
    }
}

impl<R: BufRead> Streamer for FileStreamer<R> {
    fn next_event(&mut self) -> Option<Result<StreamEvent, IngestError>> {
        if self.failed {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(IngestError::Io(format!("line {}", self.line_no + 1), e)));
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let event = match self.role {
                Role::Social => self.social(&line),
                Role::HighConfidence => self.high_confidence(&line),
            };
            if let Some(event) = event {
                if event.is_err() {
                    self.failed = true;
                }
                return Some(event);
            }
        }
    }

    fn stats(&self) -> StreamStats {
        self.stats
    }
}

impl<R: BufRead> Iterator for FileStreamer<R> {
    type Item = Result<StreamEvent, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_event()
    }
}

/// Streams a whole file into memory.
pub fn stream_from_file(
    path: &Path,
    role: Role,
    topic: &str,
) -> Result<(Vec<StreamEvent>, StreamStats), IngestError> {
    let mut streamer = FileStreamer::open(path, role, topic)?;
    let mut events = Vec::new();
    while let Some(event) = streamer.next_event() {
        events.push(event?);
    }
    Ok((events, streamer.stats()))
}
