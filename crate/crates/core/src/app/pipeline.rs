use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{Mode, PipelineConfig, Retrieval};
use super::report::{
    read_jsonl, to_jsonl, window_file, windows_csv, write_atomic, Prediction, WindowDetections, WindowReport,
    DETECTIONS_DIR, PREDICTIONS_DIR, WINDOWS_CSV, WINDOWS_JSONL,
};
use super::AppError;
use crate::hc_events::{detect, share_locations, EventTable};
use crate::hdi::{label_stream, JoinEvent, Label};
use crate::ingest::{FileStreamer, HcRecord, RejectedRecord, Role, SocialPost, StreamEvent, Streamer, REJECTS_STREAMER};
use crate::metadata::{extract_locations, resolve_post_cell, ExtractOptions, Gazetteer, GridCell};
use crate::mlfilters::{
    cap_negatives, schedule_tick, train_filter, Action, Confusion, DriftMonitor, DriftStatus, EnsembleFilter, FStore,
    HashingEncoder, MlError, Query, ScheduleState, TextEncoder, TrainSignature,
};
use crate::staging::{
    Direction, ManualClock, MetadataStore, RegistrationId, StagedRecord, StagingKey, StagingStore, StoreAudit,
    StreamerKind,
};
use crate::synth::{truth_index, SeedLabel, TruthLabel, TruthRow};

pub const STATE_DIR: &str = "state";
pub const REPORTS_DIR: &str = "reports";
const CHECKPOINT_FILE: &str = "checkpoint.json";
const RUN_FILE: &str = "run.json";

const METADATA: &str = "metadata";
const HDI: &str = "hdi";
const HDI_SRC: &str = "labels";

/// Points where a run can be made to fail on purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// After the social streamer published the tick's records.
    Streamers,
    /// After event locations were shared, before records were acknowledged.
    HcEvents,
    /// Halfway through the tick's posts, after a publish and before its ack.
    Metadata,
    /// After prediction files were written.
    Evaluate,
    /// After the labeled set was published.
    Label,
    /// After the new filter was stored.
    Train,
    /// After the tick's checkpoint was written.
    Checkpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrashPoint {
    /// 0-based tick.
    pub tick: u64,
    pub stage: Stage,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: Mode,
    pub out: PathBuf,
    pub crash: Option<CrashPoint>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub reports: Vec<WindowReport>,
    pub audit: StoreAudit,
    pub filters: usize,
}

/// Progress through the window-end stages of `next_tick`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum WindowStage {
    #[default]
    Open,
    Evaluated,
    Labeled,
    Trained,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Checkpoint {
    next_tick: u64,
    stage: WindowStage,
    current: Option<usize>,
    schedule: ScheduleState,
    monitor: Option<DriftMonitor>,
    reports: Vec<WindowReport>,
    pending: Option<WindowReport>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunInfo {
    mode: Mode,
}

/// A labeled post as handed to the trainer.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Example {
    post_id: String,
    relevant: bool,
    text: String,
}

/// The integrator's output for one window.
#[derive(Debug, Serialize, Deserialize)]
struct LabeledWindow {
    window: usize,
    examples: Vec<Example>,
    /// Texts of every post in the window, for drift calibration and the filter signature.
    texts: Vec<String>,
}

struct Registrations {
    metadata_in: RegistrationId,
    hc_in: RegistrationId,
    eval_in: RegistrationId,
    hdi_posts: RegistrationId,
    hdi_rejects: RegistrationId,
    trainer_in: RegistrationId,
}

impl Registrations {
    fn register(store: &StagingStore, topic: &str) -> Result<Self, AppError> {
        let t = |streamer: &str| format!("{streamer}:*:{topic}:*:*:*:*");
        let exports = [
            ("social_streamer", t("ss")),
            ("social_streamer", t(REJECTS_STREAMER)),
            ("hc_streamer", t("rs")),
            (METADATA, t(METADATA)),
            (HDI, t(HDI)),
        ];
        for (process, pattern) in &exports {
            store.register_template(process, Direction::Export, pattern)?;
        }
        let import = |process: &str, streamer: &str| store.register_template(process, Direction::Import, &t(streamer));
        Ok(Registrations {
            metadata_in: import(METADATA, "ss")?,
            hc_in: import("hc_events", "rs")?,
            eval_in: import("evaluator", METADATA)?,
            hdi_posts: import(HDI, METADATA)?,
            hdi_rejects: import(HDI, REJECTS_STREAMER)?,
            trainer_in: import("trainer", HDI)?,
        })
    }

    fn all(&self) -> [RegistrationId; 6] {
        [self.metadata_in, self.hc_in, self.eval_in, self.hdi_posts, self.hdi_rejects, self.trainer_in]
    }
}

/// A replay file published into the store up to the logical clock.
struct Feed {
    streamer: FileStreamer<BufReader<File>>,
    held: Option<StreamEvent>,
}

impl Feed {
    fn open(path: &Path, role: Role, topic: &str) -> Result<Self, AppError> {
        Ok(Feed { streamer: FileStreamer::open(path, role, topic)?, held: None })
    }

    /// Publishes every record stamped before `until`. Records already in
    /// the store from an earlier attempt are skipped.
    fn pump(&mut self, store: &StagingStore, until: i64) -> Result<(), AppError> {
        loop {
            let event = match self.held.take() {
                Some(e) => e,
                None => match self.streamer.next_event() {
                    Some(e) => e?,
                    None => return Ok(()),
                },
            };
            let key = event.key();
            if key.timestamp >= until {
                self.held = Some(event);
                return Ok(());
            }
            let (streamer, src) = key.sequence();
            if store.last_id(&streamer, &src).is_some_and(|last| key.id <= last) {
                continue;
            }
            store.publish(key.clone(), event.payload())?;
        }
    }
}

fn decode<T: for<'de> Deserialize<'de>>(record: &StagedRecord) -> Result<T, AppError> {
    serde_json::from_slice(&record.value).map_err(|e| AppError::Report(format!("staged record {}: {e}", record.key)))
}

struct Pipeline<'a> {
    config: &'a PipelineConfig,
    mode: Mode,
    state: PathBuf,
    reports_dir: PathBuf,
    crash: Option<CrashPoint>,
    clock: Arc<ManualClock>,
    store: StagingStore,
    mstore: MetadataStore,
    table: EventTable,
    fstore: FStore,
    gazetteer: Gazetteer,
    truth: Option<HashMap<String, TruthRow>>,
    encoder: HashingEncoder,
    regs: Registrations,
    social: Feed,
    hc: Feed,
    cp: Checkpoint,
}

/// Runs (or resumes) the full dataflow into `options.out`.
///
/// State lives under `out/state` and reports under `out/reports`. Running
/// again on the same directory resumes from the last checkpoint and yields
/// the same reports as an uninterrupted run.
pub fn run_pipeline(config: &PipelineConfig, options: &RunOptions) -> Result<RunSummary, AppError> {
    config.validate()?;
    let gazetteer = match &config.paths.gazetteer {
        Some(p) => Gazetteer::load(p)?,
        None => Gazetteer::bundled(),
    };
    let truth = match &config.paths.truth {
        Some(p) => Some(truth_index(&read_jsonl::<TruthRow>(p)?)),
        None => None,
    };
    let seeds = match &config.paths.seed_labels {
        Some(p) => read_jsonl::<SeedLabel>(p)?,
        None => Vec::new(),
    };

    let out = &options.out;
    fs::create_dir_all(out)?;
    let run_file = out.join(RUN_FILE);
    if run_file.exists() {
        let info: RunInfo = serde_json::from_str(&fs::read_to_string(&run_file)?)?;
        if info.mode != options.mode {
            return Err(AppError::Config(format!("{} holds a {:?} run", out.display(), info.mode)));
        }
    } else {
        write_atomic(&run_file, serde_json::to_string(&RunInfo { mode: options.mode })?.as_bytes())?;
    }
    let state = out.join(STATE_DIR);
    fs::create_dir_all(&state)?;
    let cp: Checkpoint = match fs::read_to_string(state.join(CHECKPOINT_FILE)) {
        Ok(text) => serde_json::from_str(&text)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Checkpoint::default(),
        Err(e) => return Err(e.into()),
    };

    let clock = Arc::new(ManualClock::new(config.start + cp.next_tick as i64 * config.tick_seconds));
    let store = StagingStore::open(&state.join("staging.journal"), clock.clone())?;
    let mstore = MetadataStore::open(&state.join("mstore.journal"), clock.clone())?;
    let regs = Registrations::register(&store, &config.topic)?;
    let mut p = Pipeline {
        config,
        mode: options.mode,
        reports_dir: out.join(REPORTS_DIR),
        crash: options.crash,
        table: EventTable::open(&state.join("events.journal"))?,
        fstore: FStore::open(state.join("filters"))?,
        social: Feed::open(&config.paths.social, Role::Social, &config.topic)?,
        hc: Feed::open(&config.paths.hc, Role::HighConfidence, &config.topic)?,
        encoder: HashingEncoder::new(config.dims),
        state,
        clock,
        store,
        mstore,
        gazetteer,
        truth,
        regs,
        cp,
    };
    if p.cp.next_tick == 0 && p.cp.current.is_none() && !seeds.is_empty() {
        p.bootstrap(&seeds)?;
    }
    for tick in p.cp.next_tick..config.total_ticks() {
        p.tick(tick)?;
    }
    p.finish()
}

impl Pipeline<'_> {
    fn crash_at(&self, tick: u64, stage: Stage) -> Result<(), AppError> {
        match self.crash {
            Some(c) if c.tick == tick && c.stage == stage => Err(AppError::InjectedCrash { tick, stage }),
            _ => Ok(()),
        }
    }

    fn save(&self) -> Result<(), AppError> {
        write_atomic(&self.state.join(CHECKPOINT_FILE), serde_json::to_string(&self.cp)?.as_bytes())
    }

    fn encode_all<'t>(&self, texts: impl IntoIterator<Item = &'t str>) -> Vec<Vec<f64>> {
        texts.into_iter().map(|t| self.encoder.encode(t)).collect()
    }

    fn current_filter(&self) -> Option<&EnsembleFilter> {
        let index = self.cp.current?;
        self.fstore.entries().iter().find(|e| e.index == index).map(|e| &e.filter)
    }

    /// Trains a filter on `examples`, stored under `train_timestamp`.
    /// A filter already stored under that time is reused, which makes a
    /// retried training step idempotent.
    fn train_and_store(
        &mut self,
        examples: &[Example],
        texts: &[String],
        train_timestamp: i64,
        warm: bool,
    ) -> Result<Option<usize>, AppError> {
        if let Some(e) = self.fstore.entries().iter().find(|e| e.train_timestamp == train_timestamp) {
            return Ok(Some(e.index));
        }
        let (pos, neg): (Vec<&Example>, Vec<&Example>) = examples.iter().partition(|e| e.relevant);
        let seed = self.config.seed ^ train_timestamp as u64;
        let neg = cap_negatives(neg, pos.len(), self.config.negative_ratio, seed);
        let kept: Vec<&Example> = pos.into_iter().chain(neg).collect();
        let xs = self.encode_all(kept.iter().map(|e| e.text.as_str()));
        let ys: Vec<bool> = kept.iter().map(|e| e.relevant).collect();
        let start = if warm { self.current_filter().cloned() } else { None };
        let ens = &self.config.ensemble;
        let filter = match train_filter(&xs, &ys, &ens.members, &ens.scheme, train_timestamp, seed, start.as_ref()) {
            Ok(f) => f,
            Err(MlError::SingleClass | MlError::NoSamples) => {
                log::warn!("no filter trained at {train_timestamp}: labeled set has a single class");
                return Ok(None);
            }
            Err(e) => return Err(e.into()),
        };
        let signature = TrainSignature::of(&self.encode_all(texts.iter().map(String::as_str)), self.config.dims);
        let entry = self.fstore.insert(filter, train_timestamp, signature, &kept)?;
        Ok(Some(entry.index))
    }

    /// Makes `index` the served filter and recalibrates the drift monitor on `texts`.
    fn serve(&mut self, index: usize, texts: &[String]) {
        self.cp.current = Some(index);
        let xs = self.encode_all(texts.iter().map(String::as_str));
        let lead = self.current_filter().expect("served filter is stored").lead().clone();
        self.cp.monitor = Some(DriftMonitor::calibrate(self.config.monitor, &lead, &xs));
    }

    fn bootstrap(&mut self, seeds: &[SeedLabel]) -> Result<(), AppError> {
        let examples: Vec<Example> = seeds
            .iter()
            .enumerate()
            .map(|(i, s)| Example { post_id: format!("seed{i}"), relevant: s.label == TruthLabel::Relevant, text: s.text.clone() })
            .collect();
        let texts: Vec<String> = seeds.iter().map(|s| s.text.clone()).collect();
        if let Some(index) = self.train_and_store(&examples, &texts, self.config.start, false)? {
            self.serve(index, &texts);
            self.cp.schedule.last_update = Some(self.config.start);
        }
        self.save()
    }

    fn tick(&mut self, tick: u64) -> Result<(), AppError> {
        let now = self.config.start + (tick as i64 + 1) * self.config.tick_seconds;
        self.clock.set(now);
        self.social.pump(&self.store, now)?;
        self.crash_at(tick, Stage::Streamers)?;
        self.hc.pump(&self.store, now)?;
        self.hc_events(tick, now)?;
        self.metadata(tick)?;
        let tpw = self.config.ticks_per_window();
        if (tick + 1) % tpw == 0 {
            self.window_end(tick, ((tick + 1) / tpw) as usize, now)?;
        }
        self.store.maybe_gc()?;
        self.cp.next_tick = tick + 1;
        self.cp.stage = WindowStage::Open;
        self.save()?;
        self.crash_at(tick, Stage::Checkpoint)
    }

    /// Matches rules over every open high-confidence record and shares the
    /// event locations. Records stay open until they leave the horizon.
    fn hc_events(&mut self, tick: u64, now: i64) -> Result<(), AppError> {
        let staged = self.store.poll_unprocessed(self.regs.hc_in, usize::MAX)?;
        let records: Vec<HcRecord> = staged.iter().map(decode).collect::<Result<_, _>>()?;
        let detection = detect(&records, &self.gazetteer, &self.config.rules, now);
        share_locations(&detection.matches, &self.gazetteer, &self.mstore, &mut self.table, &self.config.rules)?;
        self.crash_at(tick, Stage::HcEvents)?;
        for r in &staged {
            if r.key.timestamp <= now - self.config.hc_horizon_seconds {
                self.store.ack(self.regs.hc_in, &r.key)?;
            }
        }
        Ok(())
    }

    fn metadata(&mut self, tick: u64) -> Result<(), AppError> {
        let staged = self.store.poll_unprocessed(self.regs.metadata_in, usize::MAX)?;
        let options = ExtractOptions { augment: self.config.augment, ..ExtractOptions::default() };
        let half = staged.len() / 2;
        for (i, r) in staged.iter().enumerate() {
            let done = self.store.last_id(METADATA, &r.key.src).is_some_and(|last| r.key.id <= last);
            if !done {
                let mut post: SocialPost = decode(r)?;
                let found = extract_locations(&post, &self.gazetteer, &self.mstore, options)?;
                for name in found {
                    if !post.locations.iter().any(|l| l.eq_ignore_ascii_case(&name)) {
                        post.locations.push(name);
                    }
                }
                post.cell = resolve_post_cell(&post, &self.gazetteer).cell;
                let key = StagingKey {
                    streamer: StreamerKind::Process(METADATA.into()),
                    ..r.key.clone()
                };
                self.store.publish(key, serde_json::to_vec(&post)?)?;
            }
            if i == half {
                self.crash_at(tick, Stage::Metadata)?;
            }
            self.store.ack(self.regs.metadata_in, &r.key)?;
        }
        Ok(())
    }

    fn ack_pending(&self, importer: RegistrationId) -> Result<(), AppError> {
        for r in self.store.poll_unprocessed(importer, usize::MAX)? {
            self.store.ack(importer, &r.key)?;
        }
        Ok(())
    }

    fn window_end(&mut self, tick: u64, window: usize, now: i64) -> Result<(), AppError> {
        if self.cp.stage < WindowStage::Evaluated {
            self.evaluate(window, now)?;
            self.crash_at(tick, Stage::Evaluate)?;
            self.cp.stage = WindowStage::Evaluated;
            self.save()?;
        }
        self.ack_pending(self.regs.eval_in)?;
        if self.cp.stage < WindowStage::Labeled {
            self.label(window, now)?;
            self.crash_at(tick, Stage::Label)?;
            self.cp.stage = WindowStage::Labeled;
            self.save()?;
        }
        self.ack_pending(self.regs.hdi_posts)?;
        self.ack_pending(self.regs.hdi_rejects)?;
        if self.cp.stage < WindowStage::Trained {
            self.train(window, now)?;
            self.crash_at(tick, Stage::Train)?;
            self.cp.stage = WindowStage::Trained;
            self.save()?;
        }
        self.ack_pending(self.regs.trainer_in)?;
        let report = self.cp.pending.take().expect("window report is pending after evaluation");
        log::info!(
            "window {} f={:.3} p={:.3} r={:.3} drift={:?} action={:?}",
            report.window,
            report.fscore,
            report.precision,
            report.recall,
            report.drift,
            report.action
        );
        self.cp.reports.retain(|r| r.window != window);
        self.cp.reports.push(report);
        write_atomic(&self.reports_dir.join(WINDOWS_CSV), windows_csv(&self.cp.reports).as_bytes())?;
        write_atomic(&self.reports_dir.join(WINDOWS_JSONL), to_jsonl(&self.cp.reports).as_bytes())
    }

    fn evaluate(&mut self, window: usize, end: i64) -> Result<(), AppError> {
        let start = self.config.window_start(window);
        let staged = self.store.poll_unprocessed(self.regs.eval_in, usize::MAX)?;
        let mut posts: Vec<SocialPost> = staged.iter().map(decode).collect::<Result<_, _>>()?;
        posts.retain(|p| p.timestamp >= start && p.timestamp < end);
        posts.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));

        let filter = self.current_filter().cloned();
        let mut monitor = self.cp.monitor.clone();
        let mut drift = DriftStatus::Stable;
        let mut confusion = Confusion::default();
        let mut predictions = Vec::with_capacity(posts.len());
        for post in &posts {
            let x = self.encoder.encode(&post.text);
            let score = filter.as_ref().map_or(0.0, |f| f.score(&x));
            let relevant = score >= 0.5;
            if let (Some(f), Some(m)) = (&filter, monitor.as_mut()) {
                if m.push_margin(f.lead().margin(&x)) == Some(DriftStatus::Drift) {
                    drift = DriftStatus::Drift;
                }
            }
            let row = match &self.truth {
                Some(t) => Some(t.get(&post.id).ok_or_else(|| AppError::Report(format!("post {} has no truth row", post.id)))?),
                None => None,
            };
            let truth = row.map(|r| r.label == TruthLabel::Relevant);
            if let Some(actual) = truth {
                confusion.add(relevant, actual);
            }
            predictions.push(Prediction {
                post_id: post.id.clone(),
                t: post.timestamp,
                score,
                relevant,
                truth,
                event_id: row.and_then(|r| r.event_id.clone()),
                cell: post.cell,
            });
        }
        self.cp.monitor = monitor;
        self.cp.schedule.drift = Some(drift);

        let detections = detections(window, &predictions);
        let reports = &self.reports_dir;
        write_atomic(&reports.join(window_file(PREDICTIONS_DIR, window, "jsonl")), to_jsonl(&predictions).as_bytes())?;
        write_atomic(
            &reports.join(window_file(DETECTIONS_DIR, window, "json")),
            serde_json::to_string(&detections)?.as_bytes(),
        )?;
        let entry = self.cp.current.and_then(|i| self.fstore.entries().iter().find(|e| e.index == i));
        self.cp.pending = Some(WindowReport {
            window,
            mode: self.mode,
            start,
            end,
            posts: posts.len(),
            tp: confusion.tp,
            fp: confusion.fp,
            fn_: confusion.fn_,
            tn: confusion.tn,
            precision: confusion.precision(),
            recall: confusion.recall(),
            fscore: confusion.fscore(),
            labeled_relevant: 0,
            labeled_irrelevant: 0,
            events_confirmed: self.table.rows().iter().filter(|r| r.event_time >= start && r.event_time < end).count(),
            events_detected: detections.events.len(),
            false_detections: detections.false_cells.len(),
            drift,
            action: Action::None,
            filter: entry.map(|e| e.index),
            filter_trained_at: entry.map(|e| e.train_timestamp),
        });
        Ok(())
    }

    fn label(&mut self, window: usize, end: i64) -> Result<(), AppError> {
        let start = self.config.window_start(window);
        let posts: Vec<SocialPost> =
            self.store.poll_unprocessed(self.regs.hdi_posts, usize::MAX)?.iter().map(decode).collect::<Result<_, _>>()?;
        let rejects: Vec<RejectedRecord> =
            self.store.poll_unprocessed(self.regs.hdi_rejects, usize::MAX)?.iter().map(decode).collect::<Result<_, _>>()?;
        let events: Vec<JoinEvent> = self
            .table
            .rows()
            .iter()
            .enumerate()
            .map(|(i, row)| JoinEvent::from_row(i as u64, row, &self.gazetteer, self.config.rules.name_radius_km))
            .collect::<Result<_, _>>()?;
        let out = label_stream(&events, &posts, &rejects, &self.config.join);
        let pending = self.cp.pending.as_mut().expect("window report is pending after evaluation");
        pending.labeled_relevant = out.count(Label::Relevant);
        pending.labeled_irrelevant = out.count(Label::Irrelevant);

        let mut window_posts: Vec<&SocialPost> =
            posts.iter().filter(|p| p.timestamp >= start && p.timestamp < end).collect();
        window_posts.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
        let labeled = LabeledWindow {
            window,
            examples: out
                .labeled
                .into_iter()
                .map(|l| Example { post_id: l.post_id, relevant: l.label == Label::Relevant, text: l.text })
                .collect(),
            texts: window_posts.iter().map(|p| p.text.clone()).collect(),
        };
        if self.store.last_id(HDI, HDI_SRC).is_some_and(|last| last >= window as u64) {
            return Ok(());
        }
        let key = StagingKey::new(
            StreamerKind::Process(HDI.into()),
            "en",
            self.config.topic.clone(),
            HDI_SRC,
            None,
            window as u64,
            end,
        );
        self.store.publish(key, serde_json::to_vec(&labeled)?)?;
        Ok(())
    }

    fn train(&mut self, window: usize, end: i64) -> Result<(), AppError> {
        let staged = self.store.poll_unprocessed(self.regs.trainer_in, usize::MAX)?;
        let Some(record) = staged.iter().find(|r| r.key.id == window as u64) else {
            return Err(AppError::Report(format!("no labeled set staged for window {window}")));
        };
        let labeled: LabeledWindow = decode(record)?;
        let action = match self.mode {
            Mode::Frozen if window == 1 && self.cp.current.is_some() => Action::UpdateExisting,
            Mode::Frozen if window == 1 => Action::GenerateNew,
            Mode::Frozen => Action::None,
            Mode::Adaptive => schedule_tick(self.config.schedule, &self.cp.schedule, end),
        };
        let mut performed = Action::None;
        if action != Action::None {
            let warm = action != Action::GenerateNew;
            if let Some(index) = self.train_and_store(&labeled.examples, &labeled.texts, end, warm)? {
                self.serve(index, &labeled.texts);
                self.cp.schedule = ScheduleState { last_update: Some(end), drift: None };
                performed = action;
            }
        } else if self.config.retrieval == Retrieval::Nearest && !self.fstore.is_empty() {
            let xs = self.encode_all(labeled.texts.iter().map(String::as_str));
            let signature = TrainSignature::of(&xs, self.config.dims);
            let nearest = self.fstore.get(Query::Nearest(&signature.centroid))?.index;
            if Some(nearest) != self.cp.current {
                self.serve(nearest, &labeled.texts);
            }
        }
        if let Some(p) = self.cp.pending.as_mut() {
            p.action = performed;
        }
        Ok(())
    }

    /// Releases every record still held and returns the final audit.
    fn finish(self) -> Result<RunSummary, AppError> {
        for importer in self.regs.all() {
            self.ack_pending(importer)?;
        }
        self.store.gc()?;
        self.save()?;
        Ok(RunSummary { reports: self.cp.reports, audit: self.store.audit(), filters: self.fstore.len() })
    }
}

fn detections(window: usize, predictions: &[Prediction]) -> WindowDetections {
    let mut events = BTreeSet::new();
    let mut cells: BTreeMap<GridCell, bool> = BTreeMap::new();
    for p in predictions.iter().filter(|p| p.relevant) {
        let hit = p.truth == Some(true);
        if hit {
            if let Some(e) = &p.event_id {
                events.insert(e.clone());
            }
        }
        if let (Some(cell), Some(_)) = (p.cell, p.truth) {
            *cells.entry(cell).or_insert(false) |= hit;
        }
    }
    WindowDetections {
        window,
        events: events.into_iter().collect(),
        false_cells: cells.into_iter().filter(|(_, hit)| !hit).map(|(c, _)| c).collect(),
    }
}
