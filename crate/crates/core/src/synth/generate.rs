use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lm::{SynthLanguageModel, LOCATION_GROUPS, USER_FILLER_MASS};
use super::profile::{default_profiles, SignalProfile};
use super::SynthError;
use crate::geo::{haversine_km, LatLon};
use crate::ingest::{HcKind, HcLocation, HcRecord, RawSocialRecord};
use crate::metadata::{map_to_cell, Gazetteer, Place};
use crate::staging::DAY;

const HOUR: i64 = 3_600;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MentionRates {
    /// Posts naming the place in plain text.
    pub plain: f64,
    /// Posts naming it only inside a hashtag.
    pub hashtag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    /// Unix seconds at which window 1 starts.
    pub start: i64,
    pub n_windows: usize,
    pub window_seconds: i64,
    pub posts_per_window: usize,
    pub events_per_window: usize,
    /// Inclusive range of relevant posts per planted event.
    pub relevant_per_event: [usize; 2],
    /// Share of irrelevant raw records the streamer will reject.
    pub reject_rate: f64,
    pub hc_latency: i64,
    pub social_latency: i64,
    /// First drifted window (1-based) for the default profiles.
    pub drift_at: Option<usize>,
    /// Overrides the default `(relevant, confuser)` profiles.
    pub profiles: Option<(SignalProfile, SignalProfile)>,
    pub relevant_mentions: MentionRates,
    pub confuser_mentions: MentionRates,
    /// Size of the set of places that irrelevant posts talk about.
    pub popular_places: usize,
    /// Isolated sensor readings per window that confirm nothing.
    pub noise_hc_per_window: usize,
    /// Expert-labeled bootstrap samples: `[relevant, irrelevant]`.
    pub seed_labels: [usize; 2],
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            start: 1_420_070_400,
            n_windows: 12,
            window_seconds: 30 * DAY,
            posts_per_window: 2_000,
            events_per_window: 6,
            relevant_per_event: [5, 10],
            reject_rate: 0.05,
            hc_latency: 12 * HOUR,
            social_latency: HOUR,
            drift_at: Some(5),
            profiles: None,
            relevant_mentions: MentionRates { plain: 0.5, hashtag: 0.3 },
            confuser_mentions: MentionRates { plain: 0.2, hashtag: 0.15 },
            popular_places: 20,
            noise_hc_per_window: 4,
            seed_labels: [60, 180],
        }
    }
}

impl Default for MentionRates {
    fn default() -> Self {
        MentionRates { plain: 0.5, hashtag: 0.3 }
    }
}

impl SynthConfig {
    pub fn profiles(&self) -> (SignalProfile, SignalProfile) {
        self.profiles.clone().unwrap_or_else(|| default_profiles(self.drift_at))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidPlan(m));
        if self.n_windows == 0 || self.window_seconds < 7 * DAY {
            return bad("need at least one window of at least 7 days".into());
        }
        if self.social_latency >= self.hc_latency || self.social_latency < 0 {
            return bad("social latency must be >= 0 and below the high-confidence latency".into());
        }
        if self.hc_latency > DAY {
            return bad("high-confidence latency above one day would push records past the window".into());
        }
        let [lo, hi] = self.relevant_per_event;
        if lo > hi {
            return bad(format!("relevant_per_event range {lo}..={hi} is empty"));
        }
        if !(0.0..1.0).contains(&self.reject_rate) {
            return bad("reject_rate must be in [0, 1)".into());
        }
        for m in [self.relevant_mentions, self.confuser_mentions] {
            if m.plain < 0.0 || m.hashtag < 0.0 || m.plain + m.hashtag > 1.0 {
                return bad("mention rates must be >= 0 and sum to at most 1".into());
            }
        }
        if self.popular_places == 0 {
            return bad("need at least one popular place".into());
        }
        let (r, c) = self.profiles();
        r.validate()?;
        c.validate()?;
        Ok(())
    }

    pub fn window_start(&self, window: usize) -> i64 {
        self.start + (window as i64 - 1) * self.window_seconds
    }

    /// 1-based window holding time `t`, if any.
    pub fn window_of(&self, t: i64) -> Option<usize> {
        if t < self.start {
            return None;
        }
        let w = ((t - self.start) / self.window_seconds) as usize + 1;
        (w <= self.n_windows).then_some(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthLabel {
    Relevant,
    Irrelevant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRow {
    pub post_id: String,
    pub label: TruthLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<String>,
}

/// Which sensor evidence a planted event leaves behind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    PredictionRain,
    MajorQuakeRain,
    SevereQuakeRain,
    News,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEvent {
    pub id: String,
    pub window: usize,
    pub place: String,
    pub lat: f64,
    pub lon: f64,
    pub t: i64,
    pub evidence: Evidence,
    pub relevant_posts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLabel {
    pub text: String,
    pub label: TruthLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub social: Vec<RawSocialRecord>,
    pub hc: Vec<HcRecord>,
    pub truth: Vec<TruthRow>,
    pub events: Vec<PlantedEvent>,
    pub seed_labels: Vec<SeedLabel>,
}

pub const SOCIAL_FILE: &str = "social.jsonl";
pub const HC_FILE: &str = "hc.jsonl";
pub const TRUTH_FILE: &str = "truth.jsonl";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const SEED_LABELS_FILE: &str = "seed_labels.jsonl";

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), SynthError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| SynthError::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

impl SynthOutput {
    pub fn write_dir(&self, dir: &Path) -> Result<(), SynthError> {
        fs::create_dir_all(dir)?;
        write_lines(&dir.join(SOCIAL_FILE), &self.social)?;
        write_lines(&dir.join(HC_FILE), &self.hc)?;
        write_lines(&dir.join(TRUTH_FILE), &self.truth)?;
        write_lines(&dir.join(EVENTS_FILE), &self.events)?;
        write_lines(&dir.join(SEED_LABELS_FILE), &self.seed_labels)?;
        Ok(())
    }
}

/// Places events can be planted at: one-word names of five letters or more
/// with no other gazetteer place within 8 km, so the event's location name
/// is unambiguous.
pub fn event_places(gazetteer: &Gazetteer) -> Vec<&Place> {
    gazetteer
        .places()
        .iter()
        .filter(|p| p.name.len() >= 5 && p.name.chars().all(|c| c.is_ascii_alphabetic()))
        .filter(|p| {
            gazetteer
                .places()
                .iter()
                .all(|q| std::ptr::eq(*p, q) || haversine_km(p.point, q.point) > 8.0)
        })
        .collect()
}

/// A point between `p` and its cell center, so a centroid of such points
/// stays in `p`'s cell.
fn near(rng: &mut ChaCha8Rng, p: LatLon) -> LatLon {
    let center = map_to_cell(p.lat, p.lon).expect("gazetteer point is valid").center();
    let u = rng.gen_range(0.0..0.5);
    let round = |x: f64| (x * 1e5).round() / 1e5;
    let q = LatLon::new(round(p.lat + u * (center.lat - p.lat)), round(p.lon + u * (center.lon - p.lon)));
    if map_to_cell(q.lat, q.lon).ok() == map_to_cell(p.lat, p.lon).ok() {
        q
    } else {
        p
    }
}

struct Builder {
    rng: ChaCha8Rng,
    lm: SynthLanguageModel,
    relevant: SignalProfile,
    confusers: SignalProfile,
    /// Raw posts keyed by (time, sequence) before ids are assigned.
    posts: Vec<(i64, usize, RawSocialRecord, Option<TruthRow>)>,
    hc: Vec<HcRecord>,
    seq: usize,
}

enum Mention<'p> {
    None,
    Plain(&'p str),
    Hashtag(&'p str),
}

impl Builder {
    fn pick(&mut self, coeffs: &[f64]) -> usize {
        let mut u: f64 = self.rng.gen();
        for (i, c) in coeffs.iter().enumerate() {
            if u < *c {
                return i;
            }
            u -= c;
        }
        coeffs.iter().rposition(|c| *c > 0.0).unwrap_or(0)
    }

    /// Post text from signal `signal` of the combined model, with the
    /// signal keyword guaranteed and an optional place mention.
    fn text(&mut self, signal: usize, user_group: usize, location_group: usize, mention: Mention<'_>, relevant: bool) -> String {
        let len = self.rng.gen_range(6..=10);
        let mut words = self.lm.sample(&mut self.rng, signal, user_group, location_group, len);
        let keyword = self.lm.signals()[signal].keyword().to_string();
        if !words.contains(&keyword) {
            let at = self.rng.gen_range(0..=words.len());
            words.insert(at, keyword);
        }
        match mention {
            Mention::None => {}
            Mention::Plain(place) => {
                let prep = ["in", "near", "at"][self.rng.gen_range(0..3)];
                if self.rng.gen_bool(0.3) {
                    words.insert(0, format!("{place}:"));
                } else {
                    words.push(format!("{prep} {place}"));
                }
            }
            Mention::Hashtag(place) => {
                let tag = if relevant {
                    ["#PrayFor{}", "#{}Strong", "#{}Rescue"][self.rng.gen_range(0..3)]
                } else {
                    ["#{}Live", "#{}Now", "#{}Vibes"][self.rng.gen_range(0..3)]
                };
                words.push(tag.replace("{}", place));
            }
        }
        words.join(" ")
    }

    fn mention<'p>(&mut self, rates: MentionRates, place: &'p str) -> Mention<'p> {
        let u: f64 = self.rng.gen();
        if u < rates.plain {
            Mention::Plain(place)
        } else if u < rates.plain + rates.hashtag {
            Mention::Hashtag(place)
        } else {
            Mention::None
        }
    }

    fn raw(&mut self, text: Option<String>, created_at: Option<i64>) -> RawSocialRecord {
        let user_group = self.rng.gen_range(0..USER_FILLER_MASS.len());
        let links = if self.rng.gen_bool(0.2) {
            vec![format!("https://t.example/{:08x}", self.rng.gen::<u32>())]
        } else {
            vec![]
        };
        RawSocialRecord {
            id: String::new(),
            text,
            created_at,
            user: Some(format!("u{user_group}_{}", self.rng.gen_range(0..500))),
            links,
            geo: None,
            src: if self.rng.gen_bool(0.8) { "Twitter" } else { "Facebook" }.into(),
            lang: Some("en".into()),
            url: None,
        }
    }

    fn push_post(&mut self, t: i64, raw: RawSocialRecord, truth: Option<TruthRow>) {
        self.posts.push((t, self.seq, raw, truth));
        self.seq += 1;
    }

    fn hc(&mut self, kind: HcKind, value: Option<f64>, location: HcLocation, t: i64, agency: &str) {
        self.hc.push(HcRecord {
            id: String::new(),
            kind,
            value: value.map(|v| (v * 100.0).round() / 100.0),
            summary: None,
            tags: vec![],
            location,
            t,
            link: None,
            agency: agency.into(),
        });
    }

    fn plant_evidence(&mut self, evidence: Evidence, place: &Place, t0: i64) {
        let named = || HcLocation::Named { name: place.name.clone() };
        let point = |rng: &mut ChaCha8Rng| {
            let p = near(rng, place.point);
            HcLocation::Point { lat: p.lat, lon: p.lon }
        };
        match evidence {
            Evidence::PredictionRain => {
                let v = self.rng.gen_range(0.72..0.95);
                self.hc(HcKind::NoaaPrediction, Some(v), named(), t0, "noaa");
                for _ in 0..self.rng.gen_range(1..=2) {
                    let dt = self.rng.gen_range(2 * HOUR..30 * HOUR);
                    let (mm, loc) = (self.rng.gen_range(8.0..60.0), point(&mut self.rng));
                    self.hc(HcKind::Rain, Some(mm), loc, t0 + dt, "gpm");
                }
            }
            Evidence::MajorQuakeRain | Evidence::SevereQuakeRain => {
                let mag = if evidence == Evidence::MajorQuakeRain {
                    self.rng.gen_range(6.1..6.9)
                } else {
                    self.rng.gen_range(7.1..7.8)
                };
                let loc = point(&mut self.rng);
                self.hc(HcKind::Quake, Some(mag), loc, t0, "usgs");
                if evidence == Evidence::MajorQuakeRain {
                    let (v, dt) = (self.rng.gen_range(0.35..0.65), self.rng.gen_range(HOUR..12 * HOUR));
                    self.hc(HcKind::NoaaPrediction, Some(v), named(), t0 + dt, "noaa");
                }
                let (mm, dt, loc) = (self.rng.gen_range(8.0..60.0), self.rng.gen_range(2 * HOUR..40 * HOUR), point(&mut self.rng));
                self.hc(HcKind::Rain, Some(mm), loc, t0 + dt, "gpm");
            }
            Evidence::News => {
                self.hc.push(HcRecord {
                    id: String::new(),
                    kind: HcKind::News,
                    value: None,
                    summary: Some(format!("Landslide reported near {}", place.name)),
                    tags: vec!["landslide".into()],
                    location: named(),
                    t: t0,
                    link: Some(format!("https://news.example/{:08x}", self.rng.gen::<u32>())),
                    agency: "news".into(),
                });
            }
        }
    }
}

/// Generates paired social and high-confidence streams with ground truth.
pub fn generate(config: &SynthConfig, gazetteer: &Gazetteer) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let (relevant, confusers) = config.profiles();
    let mut signals = relevant.signals.clone();
    signals.extend(confusers.signals.iter().cloned());
    let n_relevant_signals = relevant.signals.len();
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        lm: SynthLanguageModel::new(signals),
        relevant,
        confusers,
        posts: Vec::new(),
        hc: Vec::new(),
        seq: 0,
    };
    let mut candidates = event_places(gazetteer);
    if candidates.len() < config.popular_places + 10 {
        return Err(SynthError::InvalidPlan(format!("gazetteer offers only {} event places", candidates.len())));
    }
    candidates.shuffle(&mut b.rng);
    let popular: Vec<&Place> = candidates.split_off(candidates.len() - config.popular_places);
    let mut events = Vec::new();
    let mut planted: Vec<(LatLon, i64)> = Vec::new();

    for window in 1..=config.n_windows {
        let ws = config.window_start(window);
        let we = ws + config.window_seconds;
        let rel_coeffs = b.relevant.coeffs_at(window).to_vec();
        let conf_coeffs = b.confusers.coeffs_at(window).to_vec();
        let mut relevant_count = 0;

        for k in 1..=config.events_per_window {
            // keep concurrent events far enough apart that their sensor
            // records never fall into one cluster
            let (mut te, mut place) = (0, candidates[0]);
            for _ in 0..50 {
                te = ws + DAY + b.rng.gen_range(0..config.window_seconds - 5 * DAY);
                place = *candidates.choose(&mut b.rng).expect("candidates checked above");
                if planted.iter().all(|(p, t)| (te - t).abs() > 7 * DAY || haversine_km(*p, place.point) > 150.0) {
                    break;
                }
            }
            planted.push((place.point, te));
            let evidence = match b.rng.gen_range(0..20) {
                0..=7 => Evidence::PredictionRain,
                8..=11 => Evidence::MajorQuakeRain,
                12..=14 => Evidence::SevereQuakeRain,
                _ => Evidence::News,
            };
            b.plant_evidence(evidence, place, te + config.hc_latency);
            let [lo, hi] = config.relevant_per_event;
            let n = b.rng.gen_range(lo..=hi);
            let id = format!("e{window:02}-{k}");
            let location_group = gazetteer.places().iter().position(|p| std::ptr::eq(p, place)).unwrap_or(0) % LOCATION_GROUPS;
            for _ in 0..n {
                let t = (te + config.social_latency + b.rng.gen_range(0..36 * HOUR)).min(we - 1);
                let signal = b.pick(&rel_coeffs);
                let user_group = b.rng.gen_range(0..USER_FILLER_MASS.len());
                let mention = b.mention(config.relevant_mentions, &place.name);
                let text = b.text(signal, user_group, location_group, mention, true);
                let raw = b.raw(Some(text), Some(t));
                let truth = TruthRow { post_id: String::new(), label: TruthLabel::Relevant, event_id: Some(id.clone()) };
                b.push_post(t, raw, Some(truth));
            }
            relevant_count += n;
            events.push(PlantedEvent {
                id,
                window,
                place: place.name.clone(),
                lat: place.point.lat,
                lon: place.point.lon,
                t: te,
                evidence,
                relevant_posts: n,
            });
        }

        for _ in relevant_count..config.posts_per_window.max(relevant_count) {
            let t = b.rng.gen_range(ws..we);
            let signal = n_relevant_signals + b.pick(&conf_coeffs);
            let user_group = b.rng.gen_range(0..USER_FILLER_MASS.len());
            let place = *popular.choose(&mut b.rng).expect("popular places checked");
            let mention = b.mention(config.confuser_mentions, &place.name);
            let location_group = b.rng.gen_range(0..LOCATION_GROUPS);
            let text = b.text(signal, user_group, location_group, mention, false);
            if b.rng.gen_bool(config.reject_rate) {
                // most rejects lost their timestamp; a few lost their text
                let raw = if b.rng.gen_bool(0.9) { b.raw(Some(text), None) } else { b.raw(None, Some(t)) };
                b.push_post(t, raw, None);
            } else {
                let raw = b.raw(Some(text), Some(t));
                let truth = TruthRow { post_id: String::new(), label: TruthLabel::Irrelevant, event_id: None };
                b.push_post(t, raw, Some(truth));
            }
        }

        for _ in 0..config.noise_hc_per_window {
            let (mut t, mut place) = (ws, candidates[0]);
            for _ in 0..50 {
                t = ws + b.rng.gen_range(0..config.window_seconds - DAY);
                place = *candidates.choose(&mut b.rng).expect("non-empty");
                if planted.iter().all(|(p, te)| (t - te).abs() > 7 * DAY || haversine_km(*p, place.point) > 150.0) {
                    break;
                }
            }
            let loc = HcLocation::Point { lat: place.point.lat, lon: place.point.lon };
            match b.rng.gen_range(0..3) {
                0 => {
                    let mm = b.rng.gen_range(1.0..30.0);
                    b.hc(HcKind::Rain, Some(mm), loc, t, "gpm");
                }
                1 => {
                    let mag = b.rng.gen_range(1.5..2.9);
                    b.hc(HcKind::Quake, Some(mag), loc, t, "usgs");
                }
                _ => {
                    let v = b.rng.gen_range(0.05..0.25);
                    b.hc(HcKind::NoaaPrediction, Some(v), HcLocation::Named { name: place.name.clone() }, t, "noaa");
                }
            }
        }
    }

    let mut seed_labels = Vec::with_capacity(config.seed_labels[0] + config.seed_labels[1]);
    let (rel0, conf0) = (b.relevant.coeffs_at(1).to_vec(), b.confusers.coeffs_at(1).to_vec());
    for (label, count) in [(TruthLabel::Relevant, config.seed_labels[0]), (TruthLabel::Irrelevant, config.seed_labels[1])] {
        for _ in 0..count {
            let signal = match label {
                TruthLabel::Relevant => b.pick(&rel0),
                TruthLabel::Irrelevant => n_relevant_signals + b.pick(&conf0),
            };
            let user_group = b.rng.gen_range(0..USER_FILLER_MASS.len());
            let location_group = b.rng.gen_range(0..LOCATION_GROUPS);
            let text = b.text(signal, user_group, location_group, Mention::None, label == TruthLabel::Relevant);
            seed_labels.push(SeedLabel { text, label });
        }
    }

    let Builder { mut posts, mut hc, .. } = b;
    posts.sort_by_key(|(t, seq, _, _)| (*t, *seq));
    let mut social = Vec::with_capacity(posts.len());
    let mut truth = Vec::with_capacity(posts.len());
    for (i, (_, _, mut raw, row)) in posts.into_iter().enumerate() {
        raw.id = format!("p{:06}", i + 1);
        if let Some(mut row) = row {
            row.post_id = raw.id.clone();
            truth.push(row);
        }
        social.push(raw);
    }
    hc.sort_by_key(|r| r.t);
    for (i, r) in hc.iter_mut().enumerate() {
        r.id = format!("h{:05}", i + 1);
    }
    Ok(SynthOutput { social, hc, truth, events, seed_labels })
}
