use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::AppError;
use crate::hc_events::RuleConfig;
use crate::hdi::JoinSpec;
use crate::mlfilters::{
    default_members, expert_weights, MemberSpec, MonitorConfig, Scheme, ScheduleMode, DEFAULT_DIMS,
};
use crate::staging::DAY;
use crate::synth::{SynthConfig, HC_FILE, SEED_LABELS_FILE, SOCIAL_FILE, TRUTH_FILE};

/// Encoder width used for synthetic runs: at the default width, hashing
/// collisions between event and confuser vocabulary cost about ten points of
/// precision.
pub const BENCHMARK_DIMS: usize = 1024;

/// Which filter the pipeline serves after a window without training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retrieval {
    /// The most recently trained filter.
    #[default]
    Latest,
    /// The stored filter whose training centroid is closest to the window's posts.
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Filters follow the update schedule.
    Adaptive,
    /// No filter updates after the first window.
    Frozen,
}

impl std::str::FromStr for Mode {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adaptive" => Ok(Mode::Adaptive),
            "frozen" => Ok(Mode::Frozen),
            other => Err(AppError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Social replay file.
    pub social: PathBuf,
    /// High-confidence replay file.
    pub hc: PathBuf,
    /// Ground-truth labels; without it the metric columns stay zero.
    #[serde(default)]
    pub truth: Option<PathBuf>,
    /// Hand-labeled `{text, label}` lines used to train the filter served in window 1.
    #[serde(default)]
    pub seed_labels: Option<PathBuf>,
    /// Tab-separated gazetteer; the bundled one when absent.
    #[serde(default)]
    pub gazetteer: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub scheme: Scheme,
    pub members: Vec<MemberSpec>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { scheme: Scheme::ModelWeighted, members: default_members() }
    }
}

fn default_topic() -> String {
    "landslides".into()
}
fn default_window() -> i64 {
    30 * DAY
}
fn default_tick() -> i64 {
    DAY
}
fn default_horizon() -> i64 {
    5 * DAY
}
fn default_windows() -> usize {
    12
}
fn default_dims() -> usize {
    DEFAULT_DIMS
}
fn default_ratio() -> f64 {
    3.0
}
fn default_schedule() -> ScheduleMode {
    ScheduleMode::User { period_seconds: 30 * DAY }
}
fn yes() -> bool {
    true
}

/// Everything a pipeline run needs, loaded from TOML.
///
/// ```toml
/// topic = "landslides"
/// start = 1420070400
/// n_windows = 12
///
/// [paths]
/// social = "social.jsonl"
/// hc = "hc.jsonl"
/// truth = "truth.jsonl"
/// seed_labels = "seed_labels.jsonl"
///
/// [schedule]
/// type = "user"
/// period_seconds = 2592000
///
/// [join.method]
/// type = "string_similarity"
/// function = "jaccard"
/// threshold = 0.5
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_topic")]
    pub topic: String,
    /// Start of window 1 (unix seconds).
    pub start: i64,
    #[serde(default = "default_window")]
    pub window_seconds: i64,
    #[serde(default = "default_windows")]
    pub n_windows: usize,
    /// Logical clock step; must divide the window length.
    #[serde(default = "default_tick")]
    pub tick_seconds: i64,
    /// How long high-confidence records stay open for rule matching.
    #[serde(default = "default_horizon")]
    pub hc_horizon_seconds: i64,
    #[serde(default = "default_dims")]
    pub dims: usize,
    /// Irrelevant training samples kept per relevant one.
    #[serde(default = "default_ratio")]
    pub negative_ratio: f64,
    #[serde(default)]
    pub seed: u64,
    /// Consult the metadata store when extracting post locations.
    #[serde(default = "yes")]
    pub augment: bool,
    #[serde(default)]
    pub retrieval: Retrieval,
    pub paths: Paths,
    #[serde(default)]
    pub rules: RuleConfig,
    #[serde(default)]
    pub join: JoinSpec,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleMode,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
}

impl PipelineConfig {
    /// A config with defaults for everything but the inputs.
    pub fn new(start: i64, paths: Paths) -> Self {
        PipelineConfig {
            topic: default_topic(),
            start,
            window_seconds: default_window(),
            n_windows: default_windows(),
            tick_seconds: default_tick(),
            hc_horizon_seconds: default_horizon(),
            dims: default_dims(),
            negative_ratio: default_ratio(),
            seed: 0,
            augment: true,
            retrieval: Retrieval::default(),
            paths,
            rules: RuleConfig::default(),
            join: JoinSpec::default(),
            schedule: default_schedule(),
            ensemble: EnsembleConfig::default(),
            monitor: MonitorConfig::default(),
        }
    }

    /// A config for a dataset written by `SynthOutput::write_dir`, with paths
    /// relative to that directory.
    pub fn for_synth(synth: &SynthConfig) -> Self {
        let paths = Paths {
            social: SOCIAL_FILE.into(),
            hc: HC_FILE.into(),
            truth: Some(TRUTH_FILE.into()),
            seed_labels: Some(SEED_LABELS_FILE.into()),
            gazetteer: None,
        };
        PipelineConfig {
            window_seconds: synth.window_seconds,
            n_windows: synth.n_windows,
            seed: synth.seed,
            dims: BENCHMARK_DIMS,
            ..PipelineConfig::new(synth.start, paths)
        }
    }

    /// Resolves relative input paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        self.paths.resolve(base);
    }

    /// Parses and validates a config file; relative paths resolve against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        config.validate()?;
        Ok(config)
    }

    /// Parses without validating; call [`validate`](Self::validate) once paths are final.
    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn ticks_per_window(&self) -> u64 {
        (self.window_seconds / self.tick_seconds) as u64
    }

    pub fn total_ticks(&self) -> u64 {
        self.ticks_per_window() * self.n_windows as u64
    }

    /// Start of 1-based window `w`.
    pub fn window_start(&self, window: usize) -> i64 {
        self.start + (window as i64 - 1) * self.window_seconds
    }

    /// Checks every field and that the input files exist.
    pub fn validate(&self) -> Result<(), AppError> {
        let bad = |m: String| Err(AppError::Config(m));
        if self.topic.is_empty() || self.topic.contains(':') || self.topic == "*" {
            return bad(format!("topic {:?} must be non-empty without ':'", self.topic));
        }
        if self.window_seconds <= 0 || self.tick_seconds <= 0 {
            return bad("window and tick lengths must be positive".into());
        }
        if self.window_seconds % self.tick_seconds != 0 {
            return bad("tick_seconds must divide window_seconds".into());
        }
        if self.n_windows == 0 {
            return bad("n_windows must be at least 1".into());
        }
        if self.hc_horizon_seconds < 0 {
            return bad("hc_horizon_seconds must be >= 0".into());
        }
        if self.dims == 0 {
            return bad("dims must be at least 1".into());
        }
        if !(self.negative_ratio > 0.0 && self.negative_ratio.is_finite()) {
            return bad("negative_ratio must be positive".into());
        }
        self.rules.validate().map_err(|e| AppError::Config(e.to_string()))?;
        self.join.validate().map_err(|e| AppError::Config(e.to_string()))?;
        match self.schedule {
            ScheduleMode::User { period_seconds } | ScheduleMode::Hybrid { period_seconds }
                if period_seconds <= 0 =>
            {
                return bad("schedule period must be positive".into())
            }
            _ => {}
        }
        if self.ensemble.members.is_empty() {
            return bad("ensemble needs at least one member".into());
        }
        if let Scheme::ExpertWeighted { values } = &self.ensemble.scheme {
            expert_weights(values, self.ensemble.members.len()).map_err(|e| AppError::Config(e.to_string()))?;
        }
        for m in &self.ensemble.members {
            let s = &m.sgd;
            if s.epochs == 0 || !(s.learning_rate > 0.0) || !(s.l2 >= 0.0) {
                return bad("member sgd needs epochs >= 1, learning_rate > 0, l2 >= 0".into());
            }
        }
        let mc = &self.monitor;
        if mc.window == 0 || mc.consecutive_needed == 0 || mc.folds == 0 {
            return bad("monitor window, consecutive_needed and folds must be >= 1".into());
        }
        if !(mc.margin_band > 0.0) || !(mc.lambda >= 0.0) {
            return bad("monitor needs margin_band > 0 and lambda >= 0".into());
        }
        for path in self.paths.all() {
            if !path.is_file() {
                return bad(format!("input file {} does not exist", path.display()));
            }
        }
        Ok(())
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.social);
        fix(&mut self.hc);
        for p in [&mut self.truth, &mut self.seed_labels, &mut self.gazetteer].into_iter().flatten() {
            fix(p);
        }
    }

    fn all(&self) -> Vec<&Path> {
        let mut out = vec![self.social.as_path(), self.hc.as_path()];
        out.extend([&self.truth, &self.seed_labels, &self.gazetteer].into_iter().flatten().map(PathBuf::as_path));
        out
    }
}
