mod common;

use std::collections::{BTreeMap, HashMap};

use common::rules_oracle;
use driftwatch::geo::{haversine_km, LatLon};
use driftwatch::hc_events::{locate, RuleConfig};
use driftwatch::metadata::{tokenize, Gazetteer};
use driftwatch::synth::{
    confuser_signals, disaster_signals, generate, MentionRates, SynthConfig, TruthLabel, FILLER,
};

fn small(seed: u64) -> SynthConfig {
    SynthConfig { seed, n_windows: 3, posts_per_window: 400, drift_at: Some(2), ..SynthConfig::default() }
}

#[test]
fn same_seed_same_bytes() {
    let gaz = Gazetteer::bundled();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate(&small(3), &gaz).unwrap().write_dir(a.path()).unwrap();
    generate(&small(3), &gaz).unwrap().write_dir(b.path()).unwrap();
    for f in ["social.jsonl", "hc.jsonl", "truth.jsonl", "events.jsonl", "seed_labels.jsonl"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let other = generate(&small(4), &gaz).unwrap();
    assert_ne!(other.social, generate(&small(3), &gaz).unwrap().social);
}

#[test]
fn no_events_no_relevant_rows() {
    let config = SynthConfig { events_per_window: 0, ..small(1) };
    let out = generate(&config, &Gazetteer::bundled()).unwrap();
    assert!(out.events.is_empty());
    assert!(out.truth.iter().all(|r| r.label == TruthLabel::Irrelevant));
    assert!(!out.truth.is_empty());
}

#[test]
fn invalid_plans_rejected() {
    let gaz = Gazetteer::bundled();
    let late_social = SynthConfig { social_latency: 20 * 3600, hc_latency: 3600, ..small(1) };
    assert!(generate(&late_social, &gaz).is_err());
    let mut bad_mix = small(1);
    let (mut r, c) = bad_mix.profiles();
    r.coeffs = vec![0.5, 0.5, 0.5];
    bad_mix.profiles = Some((r, c));
    assert!(generate(&bad_mix, &gaz).is_err());
}

#[test]
fn vocabulary_never_names_a_place() {
    let gaz = Gazetteer::bundled();
    let mut words: Vec<String> = FILLER.iter().map(|s| s.to_string()).collect();
    for s in disaster_signals().into_iter().chain(confuser_signals()) {
        words.extend(s.tokens);
    }
    for w in words {
        assert!(gaz.place(&w).is_none(), "{w} is a gazetteer place");
    }
}

#[test]
fn weak_signal_share() {
    let out = generate(&SynthConfig::default(), &Gazetteer::bundled()).unwrap();
    let relevant = out.truth.iter().filter(|r| r.label == TruthLabel::Relevant).count();
    let share = relevant as f64 / out.truth.len() as f64;
    assert!(share > 0.0 && share < 0.05, "{share}");
    for e in &out.events {
        assert!((5..=10).contains(&e.relevant_posts));
    }
    let mut ids: Vec<&str> = out.social.iter().map(|r| r.id.as_str()).collect();
    ids.dedup();
    assert_eq!(ids.len(), out.social.len());
}

#[test]
fn every_planted_event_fires_a_rule() {
    let gaz = Gazetteer::bundled();
    let out = generate(&SynthConfig::default(), &gaz).unwrap();
    for e in &out.events {
        // the pipeline only keeps recent sensor records, so evaluate each
        // event over the records of its own few days
        let recent: Vec<_> = out.hc.iter().filter(|r| r.t >= e.t && r.t <= e.t + 3 * 86_400).cloned().collect();
        let (located, excluded) = locate(&recent, &gaz);
        assert_eq!(excluded, 0);
        let sigs = rules_oracle::evaluate(&located, &RuleConfig::default(), e.t + 3 * 86_400);
        let place = LatLon::new(e.lat, e.lon);
        let fired = sigs.iter().any(|s| {
            let at = LatLon::new(f64::from_bits(s.4), f64::from_bits(s.5));
            s.1 && haversine_km(at, place) < 5.0 && s.3 >= e.t && s.3 <= e.t + 86_400
        });
        assert!(fired, "{} at {} did not fire", e.id, e.place);
    }
}

/// Share of tokens per relevant signal pool, plus one bucket for filler.
fn pool_histogram(texts: &[String]) -> (Vec<f64>, f64) {
    let signals = disaster_signals();
    let mut owner: HashMap<String, usize> = HashMap::new();
    for (i, s) in signals.iter().enumerate() {
        for t in &s.tokens {
            owner.insert(t.clone(), i);
        }
    }
    let mut counts = vec![0usize; signals.len() + 1];
    for text in texts {
        for tok in tokenize(text) {
            counts[owner.get(&tok).copied().unwrap_or(signals.len())] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let hist: Vec<f64> = counts.iter().map(|c| *c as f64 / total as f64).collect();
    let filler = hist[signals.len()];
    (hist, filler)
}

#[test]
fn drift_moves_tokens_by_the_coefficient_change() {
    let config = SynthConfig {
        n_windows: 2,
        drift_at: Some(2),
        events_per_window: 1_400,
        posts_per_window: 0,
        relevant_mentions: MentionRates { plain: 0.0, hashtag: 0.0 },
        ..SynthConfig::default()
    };
    let gaz = Gazetteer::bundled();
    let out = generate(&config, &gaz).unwrap();
    let window: BTreeMap<String, usize> = out.events.iter().map(|e| (e.id.clone(), e.window)).collect();
    let text: HashMap<&str, &str> = out.social.iter().map(|r| (r.id.as_str(), r.text.as_deref().unwrap())).collect();
    let mut before = Vec::new();
    let mut after = Vec::new();
    for row in &out.truth {
        let w = window[row.event_id.as_ref().unwrap()];
        let t = text[row.post_id.as_str()].to_string();
        if w == 1 { before.push(t) } else { after.push(t) }
    }
    assert!(before.len() >= 5_000 && after.len() >= 5_000);
    let (h1, f1) = pool_histogram(&before);
    let (h2, f2) = pool_histogram(&after);
    let tv: f64 = 0.5 * h1.iter().zip(&h2).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let (profile, _) = config.profiles();
    let coeff_tv: f64 =
        0.5 * profile.coeffs_at(1).iter().zip(profile.coeffs_at(2)).map(|(a, b)| (a - b).abs()).sum::<f64>();
    // pools are disjoint, so the change lives entirely in the non-filler mass
    let expected = coeff_tv * (1.0 - 0.5 * (f1 + f2));
    assert!((tv - expected).abs() < 0.02, "tv {tv} expected {expected}");
}

