use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use driftwatch::app::{compare_runs, comparison_csv, run_pipeline, write_atomic, Mode, PipelineConfig, RunOptions};
use driftwatch::hc_events::{detect, share_locations, EventTable, MatchKind, RuleConfig};
use driftwatch::ingest::{FileStreamer, HcRecord, Role, Streamer};
use driftwatch::metadata::Gazetteer;
use driftwatch::staging::{ManualClock, MetadataStore, StagingStore, SystemClock};
use driftwatch::synth::{generate, SynthConfig};

#[derive(Parser)]
#[command(name = "driftwatch", version, about = "Drift-adaptive event detection over social and sensor streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset plus a matching pipeline config.
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        windows: usize,
        /// 1-based window where the signal mix shifts; 0 disables drift.
        #[arg(long, default_value_t = 5)]
        drift_at: usize,
        /// TOML file overriding generator settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Stream a replay file, optionally into a staging store journal.
    Ingest {
        #[arg(long, value_parser = parse_role)]
        role: Role,
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value = "landslides")]
        topic: String,
        /// Journal to publish into; without it records are only counted.
        #[arg(long)]
        journal: Option<PathBuf>,
    },
    /// Evaluate the event rules over a high-confidence replay file.
    HcEvents {
        #[arg(long)]
        file: PathBuf,
        /// TOML file with rule thresholds; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Event table to append full matches to.
        #[arg(long)]
        table: PathBuf,
        /// Metadata store journal receiving the shared event locations.
        #[arg(long)]
        mstore: Option<PathBuf>,
    },
    /// Run (or resume) the pipeline.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "adaptive", value_parser = parse_mode)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare an adaptive run directory with a static one.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Directory for comparison.csv and comparison.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_role(s: &str) -> Result<Role, String> {
    match s {
        "social" => Ok(Role::Social),
        "high_confidence" | "hc" => Ok(Role::HighConfidence),
        other => Err(format!("unknown role {other:?} (social | high_confidence)")),
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: driftwatch::app::AppError| e.to_string())
}

fn synth(seed: u64, windows: usize, drift_at: usize, config: Option<&Path>, out: &Path) -> Result<()> {
    let mut sc = match config {
        Some(p) => toml::from_str(&fs::read_to_string(p).with_context(|| p.display().to_string())?)?,
        None => SynthConfig::default(),
    };
    sc.seed = seed;
    sc.n_windows = windows;
    sc.drift_at = (drift_at > 0).then_some(drift_at);
    let output = generate(&sc, &Gazetteer::bundled())?;
    output.write_dir(out)?;
    let pipeline = PipelineConfig::for_synth(&sc);
    write_atomic(&out.join("pipeline.toml"), pipeline.to_toml().as_bytes())?;
    println!(
        "wrote {} posts, {} sensor records, {} events to {}",
        output.social.len(),
        output.hc.len(),
        output.events.len(),
        out.display()
    );
    Ok(())
}

fn ingest(role: Role, file: &Path, topic: &str, journal: Option<&Path>) -> Result<()> {
    let store = match journal {
        Some(p) => Some(StagingStore::open(p, Arc::new(SystemClock))?),
        None => None,
    };
    let mut streamer = FileStreamer::open(file, role, topic)?;
    let mut skipped = 0u64;
    while let Some(event) = streamer.next_event() {
        let event = event?;
        if let Some(store) = &store {
            let key = event.key();
            let (name, src) = key.sequence();
            if store.last_id(&name, &src).is_some_and(|last| key.id <= last) {
                skipped += 1;
                continue;
            }
            store.publish(key.clone(), event.payload())?;
        }
    }
    let stats = streamer.stats();
    println!(
        "accepted {} rejected {} malformed {} already staged {}",
        stats.accepted, stats.rejected, stats.malformed, skipped
    );
    Ok(())
}

fn hc_events(file: &Path, config: Option<&Path>, table: &Path, mstore: Option<&Path>) -> Result<()> {
    let config = match config {
        Some(p) => RuleConfig::from_toml(&fs::read_to_string(p).with_context(|| p.display().to_string())?)?,
        None => RuleConfig::default(),
    };
    let (mut records, mut malformed) = (Vec::new(), 0usize);
    for line in fs::read_to_string(file).with_context(|| file.display().to_string())?.lines() {
        match serde_json::from_str::<HcRecord>(line).map_err(|e| e.to_string()).and_then(|r| r.validate().map(|_| r)) {
            Ok(r) => records.push(r),
            Err(_) if line.trim().is_empty() => {}
            Err(_) => malformed += 1,
        }
    }
    let now = records.iter().map(|r| r.t).max().unwrap_or(0);
    let clock = Arc::new(ManualClock::new(now));
    let store = match mstore {
        Some(p) => MetadataStore::open(p, clock)?,
        None => MetadataStore::in_memory(clock),
    };
    let gazetteer = Gazetteer::bundled();
    let detection = detect(&records, &gazetteer, &config, now);
    let mut events = EventTable::open(table)?;
    let report = share_locations(&detection.matches, &gazetteer, &store, &mut events, &config)?;
    let full = detection.matches.iter().filter(|m| m.kind == MatchKind::Full).count();
    println!(
        "{} records ({} malformed, {} unlocated); {} full and {} partial matches; {} new table rows",
        records.len(),
        malformed,
        detection.excluded,
        full,
        detection.matches.len() - full,
        report.new_rows
    );
    Ok(())
}

fn run(config: &Path, mode: Mode, out: &Path) -> Result<()> {
    let config = PipelineConfig::load(config)?;
    let summary = run_pipeline(&config, &RunOptions { mode, out: out.to_path_buf(), crash: None })?;
    for r in &summary.reports {
        println!(
            "window {:>2}  f {:.3}  p {:.3}  r {:.3}  drift {:?}  action {:?}",
            r.window, r.fscore, r.precision, r.recall, r.drift, r.action
        );
    }
    if summary.audit.unprocessed != 0 {
        bail!("{} staged records left unprocessed", summary.audit.unprocessed);
    }
    Ok(())
}

fn compare(a: &Path, b: &Path, out: Option<&Path>) -> Result<()> {
    let c = compare_runs(&a.join("reports"), &b.join("reports"))?;
    print!("{}", comparison_csv(&c));
    println!(
        "mean f {:.4} vs {:.4}; variance {:.6} vs {:.6}; events {} vs {}{}",
        c.mean_fscore_a,
        c.mean_fscore_b,
        c.variance_a,
        c.variance_b,
        c.total_adaptive,
        c.total_static,
        c.event_increase_pct.map(|p| format!(" ({p:+.1}%)")).unwrap_or_default()
    );
    if let Some(dir) = out {
        write_atomic(&dir.join("comparison.csv"), comparison_csv(&c).as_bytes())?;
        write_atomic(&dir.join("comparison.json"), serde_json::to_string_pretty(&c)?.as_bytes())?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Synth { seed, windows, drift_at, config, out } => synth(seed, windows, drift_at, config.as_deref(), &out),
        Command::Ingest { role, file, topic, journal } => ingest(role, &file, &topic, journal.as_deref()),
        Command::HcEvents { file, config, table, mstore } => {
            hc_events(&file, config.as_deref(), &table, mstore.as_deref())
        }
        Command::Run { config, mode, out } => run(&config, mode, &out),
        Command::Compare { a, b, out } => compare(&a, &b, out.as_deref()),
    }
}
