use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::{Rule1Grouping, RuleConfig};
use crate::geo::{centroid, haversine_km, LatLon, EARTH_RADIUS_KM};
use crate::ingest::{HcKind, HcLocation, HcRecord};
use crate::metadata::Gazetteer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum RuleId {
    /// High landslide prediction followed by rain, directly or via a minor quake.
    PredictionRain,
    /// Major quake, rain afterwards, and at least a low prediction.
    MajorQuakeRain,
    /// Severe quake followed by rain.
    SevereQuakeRain,
    /// News tagged with a landslide keyword.
    News,
}

impl RuleId {
    pub const ALL: [RuleId; 4] =
        [RuleId::PredictionRain, RuleId::MajorQuakeRain, RuleId::SevereQuakeRain, RuleId::News];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }
}

impl From<RuleId> for u8 {
    fn from(r: RuleId) -> u8 {
        r.number()
    }
}

impl TryFrom<u8> for RuleId {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, String> {
        RuleId::ALL
            .get((n as usize).wrapping_sub(1))
            .copied()
            .ok_or_else(|| format!("unknown rule {n}"))
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule-{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Full,
    Partial,
}

/// A confirmed (or, for partial matches, candidate) physical event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalEvent {
    pub location: LatLon,
    pub event_time: i64,
    pub source: String,
    pub url: Option<String>,
    /// The triggering records, in input order.
    pub records: Vec<HcRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleMatch {
    pub rule: RuleId,
    pub kind: MatchKind,
    pub event: PhysicalEvent,
}

/// A record with its resolved coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LocatedRecord {
    pub record: HcRecord,
    pub point: LatLon,
}

/// Resolves record locations; named locations go through the gazetteer.
/// Returns the located records and the number excluded.
pub fn locate(records: &[HcRecord], gazetteer: &Gazetteer) -> (Vec<LocatedRecord>, usize) {
    let mut out = Vec::with_capacity(records.len());
    let mut excluded = 0;
    for record in records {
        let point = match &record.location {
            HcLocation::Point { lat, lon } => Some(LatLon::new(*lat, *lon)),
            HcLocation::Named { name } => gazetteer.geocode(name).ok(),
        };
        match point.filter(LatLon::is_valid) {
            Some(point) => out.push(LocatedRecord { record: record.clone(), point }),
            None => excluded += 1,
        }
    }
    (out, excluded)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Detection {
    pub matches: Vec<RuleMatch>,
    pub excluded: usize,
}

/// Locates `records` and evaluates the rules over them.
pub fn detect(records: &[HcRecord], gazetteer: &Gazetteer, config: &RuleConfig, now: i64) -> Detection {
    let (located, excluded) = locate(records, gazetteer);
    Detection { matches: evaluate_rules(&located, config, now), excluded }
}

fn is_seed(kind: HcKind) -> bool {
    kind != HcKind::Rain
}

fn value(r: &LocatedRecord) -> f64 {
    r.record.value.unwrap_or(f64::NAN)
}

fn qualifying_rain(r: &LocatedRecord, config: &RuleConfig) -> bool {
    r.record.kind == HcKind::Rain && value(r) > config.rain_min_mm
}

/// Groups record indices into clusters.
///
/// Prediction, quake and news records are linked when within
/// `proximity_km` of each other (single linkage). A qualifying rain record
/// joins every cluster holding a seed within `proximity_km` of it. Records
/// after `now` are ignored. Each cluster lists indices in ascending order.
pub fn cluster_records(records: &[LocatedRecord], config: &RuleConfig, now: i64) -> Vec<Vec<usize>> {
    let km = config.proximity_km;
    // |dlat| bounds the great-circle distance from below
    let lat_span = km / (EARTH_RADIUS_KM * std::f64::consts::PI / 180.0) + 1e-6;
    let mut seeds: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].record.t <= now && is_seed(records[i].record.kind))
        .collect();
    seeds.sort_by(|&a, &b| records[a].point.lat.total_cmp(&records[b].point.lat).then(a.cmp(&b)));
    let lats: Vec<f64> = seeds.iter().map(|&i| records[i].point.lat).collect();
    let seeds = &seeds;
    let near = |p: LatLon| -> Vec<usize> {
        let lo = lats.partition_point(|&l| l < p.lat - lat_span);
        let hi = lats.partition_point(|&l| l <= p.lat + lat_span);
        (lo..hi).filter(|&j| haversine_km(p, records[seeds[j]].point) <= km).collect()
    };

    let mut parent: Vec<usize> = (0..seeds.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for a in 0..seeds.len() {
        for b in near(records[seeds[a]].point).into_iter().filter(|&b| b > a) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for j in 0..seeds.len() {
        let root = find(&mut parent, j);
        groups.entry(root).or_default().insert(seeds[j]);
    }
    for (i, r) in records.iter().enumerate() {
        if r.record.t > now || !qualifying_rain(r, config) {
            continue;
        }
        let roots: BTreeSet<usize> = near(r.point).into_iter().map(|j| find(&mut parent, j)).collect();
        for root in roots {
            groups.get_mut(&root).expect("root has a group").insert(i);
        }
    }
    let mut clusters: Vec<Vec<usize>> = groups.into_values().map(|s| s.into_iter().collect()).collect();
    clusters.sort();
    clusters
}

/// Per-cluster view with records of each kind sorted by time.
struct ClusterView<'a> {
    records: &'a [LocatedRecord],
    rains: Vec<usize>,
    rain_t: Vec<i64>,
    quakes: Vec<usize>,
    quake_t: Vec<i64>,
    noaa: Vec<usize>,
    noaa_t: Vec<i64>,
    news: Vec<usize>,
}

impl<'a> ClusterView<'a> {
    fn new(records: &'a [LocatedRecord], members: &[usize], config: &RuleConfig) -> Self {
        let by_time = |kind: HcKind| {
            let mut v: Vec<usize> = members.iter().copied().filter(|&i| records[i].record.kind == kind).collect();
            v.sort_by_key(|&i| (records[i].record.t, i));
            let t = v.iter().map(|&i| records[i].record.t).collect::<Vec<_>>();
            (v, t)
        };
        let (mut rains, _) = by_time(HcKind::Rain);
        rains.retain(|&i| qualifying_rain(&records[i], config));
        let rain_t = rains.iter().map(|&i| records[i].record.t).collect();
        let (quakes, quake_t) = by_time(HcKind::Quake);
        let (noaa, noaa_t) = by_time(HcKind::NoaaPrediction);
        let (news, _) = by_time(HcKind::News);
        ClusterView { records, rains, rain_t, quakes, quake_t, noaa, noaa_t, news }
    }

    fn t(&self, i: usize) -> i64 {
        self.records[i].record.t
    }

    fn in_window<'s>(idx: &'s [usize], times: &[i64], lo: i64, hi: i64) -> &'s [usize] {
        let a = times.partition_point(|&t| t < lo);
        let b = times.partition_point(|&t| t <= hi);
        &idx[a..b.max(a)]
    }

    fn rains_after(&self, t: i64, span: i64) -> &[usize] {
        Self::in_window(&self.rains, &self.rain_t, t, t.saturating_add(span))
    }

    fn quakes_near(&self, t: i64, span: i64) -> &[usize] {
        Self::in_window(&self.quakes, &self.quake_t, t.saturating_sub(span), t.saturating_add(span))
    }

    fn noaa_near(&self, t: i64, span: i64) -> &[usize] {
        Self::in_window(&self.noaa, &self.noaa_t, t.saturating_sub(span), t.saturating_add(span))
    }

    /// Records taking part in at least one satisfying tuple of `rule`.
    fn full(&self, rule: RuleId, c: &RuleConfig) -> BTreeSet<usize> {
        let look = RuleConfig::days(c.rain_lookahead_days);
        let v = |i: usize| value(&self.records[i]);
        let mut out = BTreeSet::new();
        match rule {
            RuleId::PredictionRain => {
                for &n in self.noaa.iter().filter(|&&n| v(n) > c.noaa_high) {
                    let rn = self.rains_after(self.t(n), look);
                    if !rn.is_empty() {
                        out.insert(n);
                        out.extend(rn);
                    }
                    let quakes: Vec<usize> = match c.rule1_grouping {
                        Rule1Grouping::PredictionAnchored => self
                            .quakes_near(self.t(n), RuleConfig::days(c.quake_prediction_days))
                            .to_vec(),
                        Rule1Grouping::EitherAnchor => Vec::new(),
                    };
                    for q in quakes.into_iter().filter(|&q| v(q) > c.quake_minor) {
                        let rq = self.rains_after(self.t(q), look);
                        if !rq.is_empty() {
                            out.extend([n, q]);
                            out.extend(rq);
                        }
                    }
                }
                if c.rule1_grouping == Rule1Grouping::EitherAnchor {
                    for &q in self.quakes.iter().filter(|&&q| v(q) > c.quake_minor) {
                        let rq = self.rains_after(self.t(q), look);
                        if !rq.is_empty() {
                            out.insert(q);
                            out.extend(rq);
                        }
                    }
                }
            }
            RuleId::MajorQuakeRain => {
                let span = RuleConfig::days(c.major_quake_prediction_days);
                for &q in self.quakes.iter().filter(|&&q| v(q) > c.quake_major) {
                    let rq = self.rains_after(self.t(q), look);
                    let ns: Vec<usize> =
                        self.noaa_near(self.t(q), span).iter().copied().filter(|&n| v(n) > c.noaa_low).collect();
                    if !rq.is_empty() && !ns.is_empty() {
                        out.insert(q);
                        out.extend(rq);
                        out.extend(ns);
                    }
                }
            }
            RuleId::SevereQuakeRain => {
                for &q in self.quakes.iter().filter(|&&q| v(q) > c.quake_severe) {
                    let rq = self.rains_after(self.t(q), look);
                    if !rq.is_empty() {
                        out.insert(q);
                        out.extend(rq);
                    }
                }
            }
            RuleId::News => {
                for &a in &self.news {
                    if self.records[a].record.tags.iter().any(|t| c.is_news_tag(t)) {
                        out.insert(a);
                    }
                }
            }
        }
        out
    }

    /// Records satisfying at least one single condition of `rule`.
    fn atoms(&self, rule: RuleId, c: &RuleConfig) -> BTreeSet<usize> {
        let v = |i: &usize| value(&self.records[*i]);
        let noaa_above = |th: f64| self.noaa.iter().copied().filter(move |i| v(i) > th);
        let quake_above = |th: f64| self.quakes.iter().copied().filter(move |i| v(i) > th);
        let rains = self.rains.iter().copied();
        match rule {
            RuleId::PredictionRain => noaa_above(c.noaa_high).chain(rains).chain(quake_above(c.quake_minor)).collect(),
            RuleId::MajorQuakeRain => quake_above(c.quake_major).chain(rains).chain(noaa_above(c.noaa_low)).collect(),
            RuleId::SevereQuakeRain => quake_above(c.quake_severe).chain(rains).collect(),
            RuleId::News => BTreeSet::new(),
        }
    }
}

/// Builds the event for a set of participating record indices.
pub(crate) fn build_event(records: &[LocatedRecord], participants: &BTreeSet<usize>) -> PhysicalEvent {
    let points: Vec<LatLon> = participants.iter().map(|&i| records[i].point).collect();
    let first = *participants
        .iter()
        .min_by_key(|&&i| (records[i].record.t, i))
        .expect("participants are non-empty");
    let anchor = &records[first].record;
    PhysicalEvent {
        location: centroid(&points).unwrap_or(records[first].point),
        event_time: anchor.t,
        source: anchor.agency.clone(),
        url: anchor.link.clone(),
        records: participants.iter().map(|&i| records[i].record.clone()).collect(),
    }
}

/// Canonical output order for rule matches.
pub(crate) fn sort_matches(matches: &mut [RuleMatch]) {
    let key = |m: &RuleMatch| {
        (
            m.event.event_time,
            m.rule,
            m.kind,
            m.event.records.iter().map(|r| r.id.clone()).collect::<Vec<_>>(),
        )
    };
    matches.sort_by(|a, b| {
        key(a)
            .cmp(&key(b))
            .then(a.event.location.lat.total_cmp(&b.event.location.lat))
            .then(a.event.location.lon.total_cmp(&b.event.location.lon))
    });
}

/// Evaluates every rule in every cluster.
///
/// A rule fully matches a cluster when some tuple of its records satisfies
/// all conditions; the event covers the union of all satisfying tuples. A
/// rule with no full match but at least one satisfied condition yields a
/// partial match covering the records that satisfy any condition.
pub fn evaluate_rules(records: &[LocatedRecord], config: &RuleConfig, now: i64) -> Vec<RuleMatch> {
    let mut out = Vec::new();
    for members in cluster_records(records, config, now) {
        let view = ClusterView::new(records, &members, config);
        for rule in RuleId::ALL {
            let full = view.full(rule, config);
            let (kind, participants) = if !full.is_empty() {
                (MatchKind::Full, full)
            } else {
                (MatchKind::Partial, view.atoms(rule, config))
            };
            if !participants.is_empty() {
                out.push(RuleMatch { rule, kind, event: build_event(records, &participants) });
            }
        }
    }
    sort_matches(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: i64 = 1_550_000_000;
    const DAY: i64 = 86_400;

    fn rec(id: &str, kind: HcKind, value: f64, lat: f64, lon: f64, t: i64) -> LocatedRecord {
        LocatedRecord {
            record: HcRecord {
                id: id.into(),
                kind,
                value: (kind != HcKind::News).then_some(value),
                summary: (kind == HcKind::News).then(|| "landslide buries road".to_string()),
                tags: if kind == HcKind::News { vec!["Mudslide".into()] } else { vec![] },
                location: HcLocation::Point { lat, lon },
                t,
                link: None,
                agency: format!("{kind:?}").to_lowercase(),
            },
            point: LatLon::new(lat, lon),
        }
    }

    fn full(matches: &[RuleMatch]) -> Vec<RuleId> {
        matches.iter().filter(|m| m.kind == MatchKind::Full).map(|m| m.rule).collect()
    }

    #[test]
    fn prediction_then_rain() {
        let recs = vec![
            rec("n", HcKind::NoaaPrediction, 0.75, 20.0, 92.0, T),
            rec("r", HcKind::Rain, 12.0, 20.1, 92.0, T + 2 * DAY),
        ];
        let m = evaluate_rules(&recs, &RuleConfig::default(), i64::MAX);
        assert_eq!(full(&m), vec![RuleId::PredictionRain]);
        let e = &m.iter().find(|m| m.kind == MatchKind::Full).unwrap().event;
        assert_eq!(e.event_time, T);
        assert_eq!(e.source, "noaaprediction");
        assert!((e.location.lat - 20.05).abs() < 1e-3);
    }

    #[test]
    fn severe_quake_then_rain() {
        let recs = vec![
            rec("q", HcKind::Quake, 7.2, 10.0, 10.0, T),
            rec("r", HcKind::Rain, 3.0, 10.0, 10.1, T + DAY),
        ];
        let m = evaluate_rules(&recs, &RuleConfig::default(), i64::MAX);
        assert_eq!(full(&m), vec![RuleId::SevereQuakeRain]);
    }

    #[test]
    fn tagged_news_anywhere() {
        let recs = vec![rec("a", HcKind::News, 0.0, -33.0, 151.0, T)];
        let m = evaluate_rules(&recs, &RuleConfig::default(), i64::MAX);
        assert_eq!(full(&m), vec![RuleId::News]);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn prediction_alone_is_partial() {
        let recs = vec![rec("n", HcKind::NoaaPrediction, 0.75, 20.0, 92.0, T)];
        let m = evaluate_rules(&recs, &RuleConfig::default(), i64::MAX);
        assert!(full(&m).is_empty());
        // satisfies the high prediction condition and the low one
        let partial: Vec<RuleId> = m.iter().map(|m| m.rule).collect();
        assert_eq!(partial, vec![RuleId::PredictionRain, RuleId::MajorQuakeRain]);
        assert!(m.iter().all(|m| m.kind == MatchKind::Partial));
    }

    #[test]
    fn rain_before_prediction_does_not_count() {
        let recs = vec![
            rec("r", HcKind::Rain, 5.0, 20.0, 92.0, T - DAY),
            rec("n", HcKind::NoaaPrediction, 0.9, 20.0, 92.0, T),
        ];
        assert!(full(&evaluate_rules(&recs, &RuleConfig::default(), i64::MAX)).is_empty());
    }

    #[test]
    fn quake_path_and_groupings() {
        // no rain after the prediction, but a minor quake half a day before it
        // is followed by rain
        let recs = vec![
            rec("q", HcKind::Quake, 3.5, 0.0, 0.0, T - 3 * DAY),
            rec("n", HcKind::NoaaPrediction, 0.8, 0.0, 0.1, T),
            rec("q2", HcKind::Quake, 3.5, 0.1, 0.0, T - DAY / 2),
            rec("r", HcKind::Rain, 1.0, 0.0, 0.0, T - DAY / 4),
        ];
        let ids = |c: &RuleConfig| -> Vec<String> {
            let m = evaluate_rules(&recs, c, i64::MAX);
            let e = &m.iter().find(|m| m.kind == MatchKind::Full).unwrap().event;
            e.records.iter().map(|r| r.id.clone()).collect()
        };
        let c = RuleConfig::default();
        assert_eq!(ids(&c), vec!["n", "q2", "r"]);
        // either anchor: the prediction no longer qualifies, both quakes do
        let either = RuleConfig { rule1_grouping: Rule1Grouping::EitherAnchor, ..c };
        assert_eq!(ids(&either), vec!["q", "q2", "r"]);
    }

    #[test]
    fn far_records_do_not_combine() {
        let recs = vec![
            rec("n", HcKind::NoaaPrediction, 0.75, 20.0, 92.0, T),
            rec("r", HcKind::Rain, 12.0, 21.0, 92.0, T + DAY),
        ];
        assert!(full(&evaluate_rules(&recs, &RuleConfig::default(), i64::MAX)).is_empty());
    }

    #[test]
    fn single_linkage_chains_seeds() {
        // two predictions 40 km apart chain; rain is within 50 km of the second only
        let recs = vec![
            rec("n1", HcKind::NoaaPrediction, 0.75, 0.0, 0.0, T),
            rec("n2", HcKind::NoaaPrediction, 0.1, 0.36, 0.0, T),
            rec("r", HcKind::Rain, 2.0, 0.72, 0.0, T + DAY),
        ];
        let clusters = cluster_records(&recs, &RuleConfig::default(), i64::MAX);
        assert_eq!(clusters, vec![vec![0, 1, 2]]);
        assert_eq!(full(&evaluate_rules(&recs, &RuleConfig::default(), i64::MAX)), vec![RuleId::PredictionRain]);
    }

    #[test]
    fn future_records_ignored() {
        let recs = vec![
            rec("n", HcKind::NoaaPrediction, 0.75, 20.0, 92.0, T),
            rec("r", HcKind::Rain, 12.0, 20.0, 92.0, T + 2 * DAY),
        ];
        assert!(full(&evaluate_rules(&recs, &RuleConfig::default(), T + DAY)).is_empty());
    }

    #[test]
    fn major_quake_needs_low_prediction() {
        let mut recs = vec![
            rec("q", HcKind::Quake, 6.5, 5.0, 5.0, T),
            rec("r", HcKind::Rain, 2.0, 5.0, 5.0, T + DAY),
        ];
        assert!(full(&evaluate_rules(&recs, &RuleConfig::default(), i64::MAX)).is_empty());
        recs.push(rec("n", HcKind::NoaaPrediction, 0.35, 5.0, 5.1, T + 2 * DAY));
        assert_eq!(full(&evaluate_rules(&recs, &RuleConfig::default(), i64::MAX)), vec![RuleId::MajorQuakeRain]);
    }

    #[test]
    fn rule_id_serializes_as_number() {
        assert_eq!(serde_json::to_string(&RuleId::News).unwrap(), "4");
        assert_eq!(serde_json::from_str::<RuleId>("1").unwrap(), RuleId::PredictionRain);
        assert!(serde_json::from_str::<RuleId>("0").is_err());
    }
}
