use std::collections::BTreeSet;

use driftwatch::geo::{haversine_km, LatLon};
use driftwatch::hc_events::{LocatedRecord, MatchKind, Rule1Grouping, RuleConfig, RuleId, RuleMatch};
use driftwatch::ingest::{HcKind, HcLocation, HcRecord};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const DAY: f64 = 86_400.0;

/// Canonical comparable form of a match.
pub type MatchSig = (u8, bool, Vec<String>, i64, u64, u64, String);

pub fn signature(m: &RuleMatch) -> MatchSig {
    (
        m.rule.number(),
        m.kind == MatchKind::Full,
        m.event.records.iter().map(|r| r.id.clone()).collect(),
        m.event.event_time,
        m.event.location.lat.to_bits(),
        m.event.location.lon.to_bits(),
        m.event.source.clone(),
    )
}

pub fn signatures(ms: &[RuleMatch]) -> Vec<MatchSig> {
    let mut v: Vec<MatchSig> = ms.iter().map(signature).collect();
    v.sort();
    v
}

fn secs(days: f64) -> i64 {
    (days * DAY).round() as i64
}

/// Exhaustive evaluation: O(n^2) clustering by BFS, then every record tuple
/// of every rule is checked directly.
pub fn evaluate(records: &[LocatedRecord], c: &RuleConfig, now: i64) -> Vec<MatchSig> {
    let n = records.len();
    let live: Vec<usize> = (0..n).filter(|&i| records[i].record.t <= now).collect();
    let is_seed = |i: usize| records[i].record.kind != HcKind::Rain;
    let val = |i: usize| records[i].record.value.unwrap_or(f64::NAN);
    let kind = |i: usize| records[i].record.kind;
    let t = |i: usize| records[i].record.t;
    let close = |a: usize, b: usize| haversine_km(records[a].point, records[b].point) <= c.proximity_km;
    let is_rain = |i: usize| kind(i) == HcKind::Rain && val(i) > c.rain_min_mm;

    let seeds: Vec<usize> = live.iter().copied().filter(|&i| is_seed(i)).collect();
    let mut assigned = vec![false; n];
    let mut clusters = Vec::new();
    for &s in &seeds {
        if assigned[s] {
            continue;
        }
        let mut comp = vec![s];
        assigned[s] = true;
        let mut k = 0;
        while k < comp.len() {
            let cur = comp[k];
            for &o in &seeds {
                if !assigned[o] && close(cur, o) {
                    assigned[o] = true;
                    comp.push(o);
                }
            }
            k += 1;
        }
        let mut members: BTreeSet<usize> = comp.iter().copied().collect();
        for &r in &live {
            if is_rain(r) && comp.iter().any(|&s| close(s, r)) {
                members.insert(r);
            }
        }
        clusters.push(members);
    }

    let look = secs(c.rain_lookahead_days);
    let after = |anchor: usize, r: usize| is_rain(r) && t(r) >= t(anchor) && t(r) <= t(anchor) + look;
    let noaa = |i: usize, th: f64| kind(i) == HcKind::NoaaPrediction && val(i) > th;
    let quake = |i: usize, th: f64| kind(i) == HcKind::Quake && val(i) > th;

    let mut out = Vec::new();
    for members in clusters {
        let m: Vec<usize> = members.iter().copied().collect();
        for rule in RuleId::ALL {
            let mut full = BTreeSet::new();
            match rule {
                RuleId::PredictionRain => {
                    for &a in &m {
                        for &r in &m {
                            if noaa(a, c.noaa_high) && after(a, r) {
                                full.extend([a, r]);
                            }
                        }
                    }
                    for &a in &m {
                        for &q in &m {
                            for &r in &m {
                                let ok = match c.rule1_grouping {
                                    Rule1Grouping::PredictionAnchored => {
                                        noaa(a, c.noaa_high)
                                            && quake(q, c.quake_minor)
                                            && (t(q) - t(a)).abs() <= secs(c.quake_prediction_days)
                                            && after(q, r)
                                    }
                                    Rule1Grouping::EitherAnchor => a == q && quake(q, c.quake_minor) && after(q, r),
                                };
                                if ok {
                                    full.extend([a, q, r]);
                                }
                            }
                        }
                    }
                }
                RuleId::MajorQuakeRain => {
                    for &q in &m {
                        for &r in &m {
                            for &a in &m {
                                if quake(q, c.quake_major)
                                    && after(q, r)
                                    && noaa(a, c.noaa_low)
                                    && (t(a) - t(q)).abs() <= secs(c.major_quake_prediction_days)
                                {
                                    full.extend([q, r, a]);
                                }
                            }
                        }
                    }
                }
                RuleId::SevereQuakeRain => {
                    for &q in &m {
                        for &r in &m {
                            if quake(q, c.quake_severe) && after(q, r) {
                                full.extend([q, r]);
                            }
                        }
                    }
                }
                RuleId::News => {
                    for &a in &m {
                        let tagged = records[a]
                            .record
                            .tags
                            .iter()
                            .any(|tag| c.news_tags.iter().any(|nt| nt.eq_ignore_ascii_case(tag)));
                        if kind(a) == HcKind::News && tagged {
                            full.insert(a);
                        }
                    }
                }
            }
            let (is_full, parts) = if !full.is_empty() {
                (true, full)
            } else {
                let atoms: BTreeSet<usize> = m
                    .iter()
                    .copied()
                    .filter(|&i| match rule {
                        RuleId::PredictionRain => noaa(i, c.noaa_high) || is_rain(i) || quake(i, c.quake_minor),
                        RuleId::MajorQuakeRain => quake(i, c.quake_major) || is_rain(i) || noaa(i, c.noaa_low),
                        RuleId::SevereQuakeRain => quake(i, c.quake_severe) || is_rain(i),
                        RuleId::News => false,
                    })
                    .collect();
                (false, atoms)
            };
            if parts.is_empty() {
                continue;
            }
            let points: Vec<LatLon> = parts.iter().map(|&i| records[i].point).collect();
            let anchor = *parts.iter().min_by_key(|&&i| (t(i), i)).unwrap();
            let loc = driftwatch::geo::centroid(&points).unwrap_or(records[anchor].point);
            out.push((
                rule.number(),
                is_full,
                parts.iter().map(|&i| records[i].record.id.clone()).collect(),
                t(anchor),
                loc.lat.to_bits(),
                loc.lon.to_bits(),
                records[anchor].record.agency.clone(),
            ));
        }
    }
    out.sort();
    out
}

/// Random record set of up to `max_len` records around a few hot spots, with
/// values and gaps landing on rule thresholds now and then.
pub fn random_records(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<LocatedRecord> {
    let len = rng.gen_range(0..=max_len);
    let centers: Vec<LatLon> = (0..rng.gen_range(1..5))
        .map(|_| LatLon::new(rng.gen_range(-60.0..60.0), rng.gen_range(-170.0..170.0)))
        .collect();
    let t0 = 1_500_000_000i64;
    let mut times: Vec<i64> = (0..len)
        .map(|_| {
            if rng.gen_bool(0.2) {
                // whole-day offsets hit window edges exactly
                t0 + rng.gen_range(0..15) * 86_400
            } else {
                t0 + rng.gen_range(0..15 * 86_400)
            }
        })
        .collect();
    times.sort();
    times
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let center = centers[rng.gen_range(0..centers.len())];
            let point = driftwatch::geo::destination(center, rng.gen_range(0.0..360.0), rng.gen_range(0.0..90.0));
            let kind = match rng.gen_range(0..10) {
                0..=3 => HcKind::Rain,
                4..=5 => HcKind::Quake,
                6..=8 => HcKind::NoaaPrediction,
                _ => HcKind::News,
            };
            let value = match kind {
                HcKind::Rain => Some(if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..20.0) }),
                HcKind::Quake => Some(if rng.gen_bool(0.1) {
                    [3.0, 6.0, 7.0][rng.gen_range(0..3)]
                } else {
                    rng.gen_range(0.0..8.5)
                }),
                HcKind::NoaaPrediction => Some(if rng.gen_bool(0.1) {
                    [0.3, 0.7][rng.gen_range(0..2)]
                } else {
                    rng.gen_range(0.0..1.0)
                }),
                HcKind::News => None,
            };
            let tags = if kind == HcKind::News {
                let pool = ["landslide", "Mudslide", "flood", "election"];
                vec![pool[rng.gen_range(0..pool.len())].to_string()]
            } else {
                vec![]
            };
            LocatedRecord {
                record: HcRecord {
                    id: format!("h{i}"),
                    kind,
                    value,
                    summary: (kind == HcKind::News).then(|| "report".to_string()),
                    tags,
                    location: HcLocation::Point { lat: point.lat, lon: point.lon },
                    t,
                    link: None,
                    agency: format!("agency{}", rng.gen_range(0..3)),
                },
                point,
            }
        })
        .collect()
}
