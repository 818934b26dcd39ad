use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::spec::{JoinMethod, JoinSpec, Window};
use crate::geo::{haversine_km, LatLon, EARTH_RADIUS_KM};
use crate::hc_events::{location_name, EventRow, HcError, RowId};
use crate::ingest::SocialPost;
use crate::metadata::{map_to_cell, tokenize, Gazetteer, GridCell, CELLS_PER_DEGREE, COLS, ROWS};

const DAY: i64 = 86_400;

/// An event as seen by the join: position, cell, time and location name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinEvent {
    pub row: RowId,
    pub location: LatLon,
    pub cell: GridCell,
    pub time: i64,
    pub name: String,
}

impl JoinEvent {
    pub fn from_row(row: RowId, event: &EventRow, gazetteer: &Gazetteer, name_radius_km: f64) -> Result<Self, HcError> {
        let full = event.event()?;
        let cell = map_to_cell(event.lat, event.lon)
            .map_err(|e| HcError::Table(format!("row {row}: {e}")))?;
        Ok(JoinEvent {
            row,
            location: full.location,
            cell,
            time: event.event_time,
            name: location_name(&full, gazetteer, name_radius_km),
        })
    }
}

fn day(t: i64) -> i64 {
    t.div_euclid(DAY)
}

/// Whether the post contains a keyword token. An empty list accepts all.
pub fn has_keyword(text: &str, keywords: &[String]) -> bool {
    keywords.is_empty() || tokenize(text).iter().any(|t| keywords.iter().any(|k| k.eq_ignore_ascii_case(t)))
}

/// Whether a post falls in the event's window. Data windows measure distance
/// from the post's cell center, so posts without a cell never qualify.
pub fn in_window(event: &JoinEvent, post: &SocialPost, window: Window) -> bool {
    match window {
        Window::User { days_before, days_after } => {
            let lo = event.time - (days_before * DAY as f64).round() as i64;
            let hi = event.time + (days_after * DAY as f64).round() as i64;
            (lo..=hi).contains(&post.timestamp)
        }
        Window::Data { dist_km, dt_seconds } => match post.cell {
            Some(cell) => {
                (post.timestamp - event.time).abs() <= dt_seconds && haversine_km(cell.center(), event.location) <= dist_km
            }
            None => false,
        },
    }
}

/// Posts in the event's window.
pub fn select_window<'a>(event: &JoinEvent, posts: &'a [SocialPost], window: Window) -> Vec<&'a SocialPost> {
    posts.iter().filter(|p| in_window(event, p, window)).collect()
}

/// Best similarity between the post's location strings and the event name.
pub fn location_similarity(post: &SocialPost, event: &JoinEvent, function: super::SimFn) -> f64 {
    post.locations.iter().map(|l| function.eval(l, &event.name)).fold(0.0, f64::max)
}

fn fields_equal(post_field: &str, event_field: &str, post: &SocialPost, event: &JoinEvent) -> bool {
    match (post_field, event_field) {
        ("cell", "cell") => post.cell == Some(event.cell),
        ("date", "date") => day(post.timestamp) == day(event.time),
        ("location", "location_name") => post.locations.iter().any(|l| l.eq_ignore_ascii_case(&event.name)),
        _ => false,
    }
}

/// The method predicate alone, with the number of similarity evaluations it used.
fn method_matches(post: &SocialPost, event: &JoinEvent, method: &JoinMethod) -> (bool, usize) {
    match method {
        JoinMethod::SchemaMatch { mapping } => (mapping.iter().all(|(p, e)| fields_equal(p, e, post, event)), 0),
        JoinMethod::StringSimilarity { function, threshold } => {
            (location_similarity(post, event, *function) > *threshold, 1)
        }
        JoinMethod::Natural { attributes } => (attributes.iter().all(|a| fields_equal(a, a, post, event)), 0),
    }
}

/// Full join predicate for one pair. Returns the match and the number of
/// similarity evaluations spent.
pub fn pair_matches(event: &JoinEvent, post: &SocialPost, spec: &JoinSpec) -> (bool, usize) {
    if spec.require_cell && post.cell != Some(event.cell) {
        return (false, 0);
    }
    if !in_window(event, post, spec.window) || !has_keyword(&post.text, &spec.keywords) {
        return (false, 0);
    }
    method_matches(post, event, &spec.method)
}

/// Posts among `candidates` that join with `event`.
pub fn join<'a>(event: &JoinEvent, candidates: &[&'a SocialPost], spec: &JoinSpec) -> Vec<&'a SocialPost> {
    candidates.iter().copied().filter(|p| pair_matches(event, p, spec).0).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JoinOutput {
    /// `(event index, post index)`, sorted.
    pub pairs: Vec<(usize, usize)>,
    pub similarity_evals: usize,
}

/// Time-sorted post indices for one bucket.
#[derive(Default)]
struct Bucket {
    posts: Vec<usize>,
    times: Vec<i64>,
}

impl Bucket {
    fn range(&self, lo: i64, hi: i64) -> &[usize] {
        let a = self.times.partition_point(|&t| t < lo);
        let b = self.times.partition_point(|&t| t <= hi);
        &self.posts[a..b.max(a)]
    }
}

fn time_bounds(event: &JoinEvent, window: Window) -> (i64, i64) {
    match window {
        Window::User { days_before, days_after } => (
            event.time - (days_before * DAY as f64).round() as i64,
            event.time + (days_after * DAY as f64).round() as i64,
        ),
        Window::Data { dt_seconds, .. } => (event.time - dt_seconds, event.time + dt_seconds),
    }
}

/// Cells whose centers can lie within `km` of `cell`'s center, or `None`
/// when the neighbourhood is too wide to be worth enumerating.
fn cells_within(cell: GridCell, km: f64) -> Option<Vec<GridCell>> {
    let row_km = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0 / CELLS_PER_DEGREE;
    let drow = (km / row_km).ceil() as i64 + 1;
    let lo_row = (cell.row as i64 - drow).max(0);
    let hi_row = (cell.row as i64 + drow).min(ROWS as i64 - 1);
    let max_abs_lat = [lo_row, hi_row + 1]
        .iter()
        .map(|&r| (r as f64 / CELLS_PER_DEGREE - 90.0).abs())
        .fold(0.0, f64::max);
    let col_km = row_km * max_abs_lat.to_radians().cos();
    if col_km <= 1e-9 {
        return None;
    }
    let dcol = (km / col_km).ceil() as i64 + 1;
    if 2 * dcol + 1 >= COLS as i64 || (hi_row - lo_row + 1) * (2 * dcol + 1) > 10_000 {
        return None;
    }
    let mut out = Vec::new();
    for row in lo_row..=hi_row {
        for dc in -dcol..=dcol {
            let col = (cell.col as i64 + dc).rem_euclid(COLS as i64);
            out.push(GridCell { row: row as u32, col: col as u32 });
        }
    }
    Some(out)
}

/// Joins every event with every post using cell buckets and a time-sorted
/// sweep, so the similarity predicate only runs on pairs that already pass
/// the cell, window and keyword checks.
pub fn join_all(events: &[JoinEvent], posts: &[SocialPost], spec: &JoinSpec) -> JoinOutput {
    let keyword: Vec<bool> = posts.iter().map(|p| has_keyword(&p.text, &spec.keywords)).collect();
    let mut by_cell: HashMap<GridCell, Bucket> = HashMap::new();
    let mut all = Bucket::default();
    let mut order: Vec<usize> = (0..posts.len()).filter(|&i| keyword[i]).collect();
    order.sort_by_key(|&i| (posts[i].timestamp, i));
    for &i in &order {
        if let Some(cell) = posts[i].cell {
            let b = by_cell.entry(cell).or_default();
            b.posts.push(i);
            b.times.push(posts[i].timestamp);
        }
        all.posts.push(i);
        all.times.push(posts[i].timestamp);
    }

    let mut out = JoinOutput::default();
    for (e, event) in events.iter().enumerate() {
        let (lo, hi) = time_bounds(event, spec.window);
        let cells = if spec.cell_blocked() {
            Some(vec![event.cell])
        } else if let Window::Data { dist_km, .. } = spec.window {
            cells_within(event.cell, dist_km)
        } else {
            None
        };
        let mut candidates: Vec<usize> = match cells {
            Some(cells) => cells
                .iter()
                .filter_map(|c| by_cell.get(c))
                .flat_map(|b| b.range(lo, hi).iter().copied())
                .collect(),
            None => all.range(lo, hi).to_vec(),
        };
        candidates.sort_unstable();
        candidates.dedup();
        for p in candidates {
            let post = &posts[p];
            if spec.require_cell && post.cell != Some(event.cell) {
                continue;
            }
            if !in_window(event, post, spec.window) {
                continue;
            }
            let (hit, evals) = method_matches(post, event, &spec.method);
            out.similarity_evals += evals;
            if hit {
                out.pairs.push((e, p));
            }
        }
    }
    out.pairs.sort_unstable();
    out
}
