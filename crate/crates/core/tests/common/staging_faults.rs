//! Randomized publish/poll/ack/crash/restart schedules checked against a
//! plain in-memory model of the delivery contract.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use driftwatch::staging::{Direction, ManualClock, RegistrationId, StagingKey, StagingStore, StreamerKind};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SRCS: [&str; 2] = ["Twitter", "Facebook"];

#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub published: usize,
    pub acked: usize,
    pub crashes: usize,
    pub redeliveries: usize,
    pub collected: usize,
}

struct Model {
    /// Importers (by registration order) still owing an ack, per key.
    pending: BTreeMap<String, BTreeSet<usize>>,
    /// Keys every matching importer has acknowledged.
    done: BTreeSet<String>,
    keys: BTreeMap<String, StagingKey>,
    next_id: [u64; 2],
    importers: Vec<(RegistrationId, String)>,
}

fn open(path: &Path, clock: &Arc<ManualClock>) -> StagingStore {
    StagingStore::open(path, clock.clone()).expect("journal reopens")
}

fn matches(pattern: &str, key: &StagingKey) -> bool {
    driftwatch::staging::KeyTemplate::parse(pattern).unwrap().matches(key)
}

/// Runs one schedule in `dir`; returns what happened or the first violation.
pub fn run_schedule(seed: u64, dir: &Path) -> Result<Tally, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let path = dir.join(format!("s{seed}.journal"));
    let clock = Arc::new(ManualClock::new(1_500_000_000));
    let mut store = open(&path, &clock);
    let mut tally = Tally::default();
    let mut model = Model {
        pending: BTreeMap::new(),
        done: BTreeSet::new(),
        keys: BTreeMap::new(),
        next_id: [1, 1],
        importers: Vec::new(),
    };
    let patterns = ["ss:*:*:*:*:*:*", "ss:*:*:Twitter:*:*:*", "ss:en:*:*:*:*:*"];
    let register = |store: &StagingStore, model: &mut Model, i: usize| {
        let id = store.register_template(&format!("w{i}"), Direction::Import, patterns[i]).unwrap();
        model.importers.push((id, patterns[i].to_string()));
    };
    register(&store, &mut model, 0);
    register(&store, &mut model, 1);

    let steps = rng.gen_range(20..80);
    for step in 0..steps {
        clock.advance(rng.gen_range(0..90));
        match rng.gen_range(0..100) {
            0..=34 => {
                let s = rng.gen_range(0..2);
                let id = model.next_id[s];
                let lang = if rng.gen_bool(0.8) { "en" } else { "es" };
                let key = StagingKey::new(StreamerKind::Social, lang, "t", SRCS[s], None, id, clock_now(&clock));
                store.publish(key.clone(), vec![step as u8]).map_err(|e| e.to_string())?;
                model.next_id[s] += 1;
                let owed: BTreeSet<usize> =
                    (0..model.importers.len()).filter(|&i| matches(&model.importers[i].1, &key)).collect();
                let text = key.to_string();
                if owed.is_empty() {
                    model.done.insert(text.clone());
                } else {
                    model.pending.insert(text.clone(), owed);
                }
                model.keys.insert(text, key);
                tally.published += 1;
            }
            35..=69 => {
                let i = rng.gen_range(0..model.importers.len());
                let max_n = rng.gen_range(1..6);
                let got = store.poll_unprocessed(model.importers[i].0, max_n).map_err(|e| e.to_string())?;
                let want: Vec<&String> = owed_to(&model, i).into_iter().take(max_n).collect();
                let got_keys: Vec<String> = got.iter().map(|r| r.key.to_string()).collect();
                if got_keys.iter().collect::<Vec<_>>() != want {
                    return Err(format!("seed {seed} step {step}: importer {i} polled {got_keys:?}, owed {want:?}"));
                }
                for r in got {
                    let text = r.key.to_string();
                    if rng.gen_bool(0.6) {
                        store.ack(model.importers[i].0, &r.key).map_err(|e| e.to_string())?;
                        let owed = model.pending.get_mut(&text).expect("polled key is pending");
                        owed.remove(&i);
                        if owed.is_empty() {
                            model.pending.remove(&text);
                            model.done.insert(text);
                        }
                        tally.acked += 1;
                    } else {
                        tally.redeliveries += 1;
                    }
                }
            }
            70..=79 => {
                tally.collected += store.gc().map_err(|e| e.to_string())?;
                for text in std::mem::take(&mut model.done) {
                    model.keys.remove(&text);
                }
            }
            80..=84 if model.importers.len() < 3 => register(&store, &mut model, 2),
            _ => {
                drop(store);
                if rng.gen_bool(0.5) {
                    // a write torn by the crash
                    let mut f = OpenOptions::new().append(true).open(&path).unwrap();
                    f.write_all(b"{\"op\":\"publish\",\"key\":\"ss:en").unwrap();
                }
                store = open(&path, &clock);
                for (i, (_, pattern)) in model.importers.clone().iter().enumerate() {
                    let id = store.register_template(&format!("w{i}"), Direction::Import, pattern).unwrap();
                    if id != model.importers[i].0 {
                        return Err(format!("seed {seed}: registration {i} changed id across restart"));
                    }
                }
                tally.crashes += 1;
            }
        }
        check(&store, &model, seed, step)?;
    }
    Ok(tally)
}

fn clock_now(clock: &Arc<ManualClock>) -> i64 {
    use driftwatch::staging::Clock;
    clock.now()
}

fn owed_to(model: &Model, importer: usize) -> Vec<&String> {
    let mut keys: Vec<(&u64, &String)> = model
        .pending
        .iter()
        .filter(|(_, owed)| owed.contains(&importer))
        .map(|(text, _)| (&model.keys[text].id, text))
        .collect();
    keys.sort();
    keys.into_iter().map(|(_, t)| t).collect()
}

/// No pending record is missing, and nothing unacknowledged was deleted.
fn check(store: &StagingStore, model: &Model, seed: u64, step: usize) -> Result<(), String> {
    for (text, owed) in &model.pending {
        let Some(rec) = store.get(&model.keys[text]) else {
            return Err(format!("seed {seed} step {step}: lost {text}"));
        };
        let ids: BTreeSet<usize> = model
            .importers
            .iter()
            .enumerate()
            .filter(|(_, (id, _))| rec.pending_importers.contains(id))
            .map(|(i, _)| i)
            .collect();
        if &ids != owed {
            return Err(format!("seed {seed} step {step}: {text} pending for {ids:?}, model {owed:?}"));
        }
    }
    for (i, (id, _)) in model.importers.iter().enumerate() {
        let all = store.poll_unprocessed(*id, usize::MAX).map_err(|e| e.to_string())?;
        if all.len() != owed_to(model, i).len() {
            return Err(format!("seed {seed} step {step}: importer {i} sees {} pending, model {}", all.len(), owed_to(model, i).len()));
        }
    }
    let audit = store.audit();
    if audit.unprocessed != model.pending.len() {
        return Err(format!("seed {seed} step {step}: audit {} unprocessed, model {}", audit.unprocessed, model.pending.len()));
    }
    Ok(())
}
