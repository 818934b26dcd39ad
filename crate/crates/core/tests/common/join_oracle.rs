use driftwatch::geo::{haversine_km, LatLon};
use driftwatch::hdi::{JoinEvent, JoinMethod, JoinSpec, SimFn, Window};
use driftwatch::ingest::SocialPost;
use driftwatch::metadata::{map_to_cell, GridCell};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const DAY: i64 = 86_400;

fn keyword(text: &str, keywords: &[String]) -> bool {
    if keywords.is_empty() {
        return true;
    }
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .any(|w| !w.is_empty() && keywords.iter().any(|k| k.to_lowercase() == w))
}

fn window_ok(e: &JoinEvent, p: &SocialPost, w: Window) -> bool {
    match w {
        Window::User { days_before, days_after } => {
            p.timestamp >= e.time - (days_before * DAY as f64).round() as i64
                && p.timestamp <= e.time + (days_after * DAY as f64).round() as i64
        }
        Window::Data { dist_km, dt_seconds } => {
            p.cell.is_some_and(|c| haversine_km(c.center(), e.location) <= dist_km)
                && (p.timestamp - e.time).abs() <= dt_seconds
        }
    }
}

fn field(p: &SocialPost, e: &JoinEvent, pf: &str, ef: &str) -> bool {
    match (pf, ef) {
        ("cell", "cell") => p.cell == Some(e.cell),
        ("date", "date") => p.timestamp.div_euclid(DAY) == e.time.div_euclid(DAY),
        ("location", "location_name") => p.locations.iter().any(|l| l.to_lowercase() == e.name.to_lowercase()),
        _ => false,
    }
}

/// Evaluates the full predicate on every pair. Returns the matching pairs
/// and the number of similarity evaluations (one per pair for similarity joins).
pub fn brute_force(events: &[JoinEvent], posts: &[SocialPost], spec: &JoinSpec) -> (Vec<(usize, usize)>, usize) {
    let mut pairs = Vec::new();
    let mut evals = 0;
    for (i, e) in events.iter().enumerate() {
        for (j, p) in posts.iter().enumerate() {
            let method = match &spec.method {
                JoinMethod::StringSimilarity { function, threshold } => {
                    evals += 1;
                    p.locations.iter().map(|l| function.eval(l, &e.name)).fold(0.0, f64::max) > *threshold
                }
                JoinMethod::SchemaMatch { mapping } => mapping.iter().all(|(a, b)| field(p, e, a, b)),
                JoinMethod::Natural { attributes } => attributes.iter().all(|a| field(p, e, a, a)),
            };
            let cell = !spec.require_cell || p.cell == Some(e.cell);
            if method && cell && window_ok(e, p, spec.window) && keyword(&p.text, &spec.keywords) {
                pairs.push((i, j));
            }
        }
    }
    (pairs, evals)
}

const NAMES: [&str; 6] = ["Sittwe", "Rio de Janeiro", "Rio", "Kandy", "Sittwe Port", "Quito"];

/// Random events and posts over a small patch of neighbouring cells.
pub fn random_instance(rng: &mut ChaCha8Rng, n_posts: usize, n_events: usize) -> (Vec<JoinEvent>, Vec<SocialPost>) {
    let spread = rng.gen_range(0.05..1.0);
    instance_with_spread(rng, n_posts, n_events, spread)
}

/// Events and posts over a `spread`-degree square, 20 days long.
pub fn instance_with_spread(
    rng: &mut ChaCha8Rng,
    n_posts: usize,
    n_events: usize,
    spread: f64,
) -> (Vec<JoinEvent>, Vec<SocialPost>) {
    let origin = LatLon::new(rng.gen_range(-50.0..50.0), rng.gen_range(-170.0..170.0));
    let t0 = 1_500_000_000i64;
    let point = |rng: &mut ChaCha8Rng| {
        LatLon::new(origin.lat + rng.gen_range(0.0..spread), origin.lon + rng.gen_range(0.0..spread))
    };
    let events = (0..n_events)
        .map(|i| {
            let location = point(rng);
            JoinEvent {
                row: i as u64,
                location,
                cell: map_to_cell(location.lat, location.lon).unwrap(),
                time: t0 + rng.gen_range(0..20 * DAY),
                name: NAMES[rng.gen_range(0..NAMES.len())].to_string(),
            }
        })
        .collect();
    let words = ["landslide", "Mudslide!", "#rockslide", "rain", "vote", "concert", "road"];
    let posts = (0..n_posts)
        .map(|i| {
            let cell: Option<GridCell> = if rng.gen_bool(0.9) {
                let p = point(rng);
                Some(map_to_cell(p.lat, p.lon).unwrap())
            } else {
                None
            };
            let text: Vec<&str> = (0..rng.gen_range(1..5)).map(|_| words[rng.gen_range(0..words.len())]).collect();
            let locations = (0..rng.gen_range(0..3)).map(|_| NAMES[rng.gen_range(0..NAMES.len())].to_string()).collect();
            SocialPost {
                id: format!("p{i}"),
                text: text.join(" "),
                locations,
                timestamp: t0 + rng.gen_range(0..20 * DAY),
                links: vec![],
                user: "u".into(),
                src: "Twitter".into(),
                url: None,
                cell,
            }
        })
        .collect();
    (events, posts)
}

pub fn random_spec(rng: &mut ChaCha8Rng) -> JoinSpec {
    let method = match rng.gen_range(0..4) {
        0 => JoinMethod::StringSimilarity {
            function: if rng.gen_bool(0.5) { SimFn::Jaccard } else { SimFn::LevenshteinRatio },
            threshold: [0.3, 0.5, 0.8, 1.0][rng.gen_range(0..4)],
        },
        1 => JoinMethod::Natural {
            attributes: [vec!["cell".to_string()], vec!["date".to_string()], vec!["cell".into(), "date".into()]]
                [rng.gen_range(0..3)]
            .clone(),
        },
        2 => JoinMethod::SchemaMatch {
            mapping: [("location".to_string(), "location_name".to_string())].into(),
        },
        _ => JoinMethod::SchemaMatch { mapping: [("date".to_string(), "date".to_string())].into() },
    };
    let window = if rng.gen_bool(0.5) {
        Window::User { days_before: rng.gen_range(0..5) as f64, days_after: rng.gen_range(0..5) as f64 }
    } else {
        Window::Data { dist_km: rng.gen_range(1.0..60.0), dt_seconds: rng.gen_range(0..4 * DAY) }
    };
    JoinSpec {
        method,
        window,
        require_cell: rng.gen_bool(0.5),
        keywords: if rng.gen_bool(0.8) { JoinSpec::default().keywords } else { vec![] },
    }
}
