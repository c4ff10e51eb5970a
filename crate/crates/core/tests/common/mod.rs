//! Generators and brute-force oracles shared by the integration tests.
//! The oracles work from their own copies of the input values and never
//! call into the library code they check.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ulearn_core::context::{validate_instance, ContextSnapshot, ContextTemplate, RawContext};
use ulearn_core::geo::{GeoPoint, Poi};
use ulearn_core::learning::AxisMembership;

pub const R: f64 = 6_371_000.0;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * R * h.sqrt().min(1.0).asin()
}

pub fn random_pois(rng: &mut ChaCha8Rng, n: usize, lat0: f64, lon0: f64, span: f64) -> Vec<Poi> {
    let cats = ["monastery", "museum", "castle", "forest", "gas_station"];
    (0..n)
        .map(|i| {
            let m = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            Poi::new(
                format!("p{i:04}"),
                format!("Point {i}"),
                GeoPoint::new(lat0 + rng.gen_range(0.0..span), lon0 + rng.gen_range(0.0..span)).unwrap(),
                AxisMembership::new(m).unwrap(),
                rng.gen_range(10..90),
                *cats.choose(rng).unwrap(),
                "",
            )
            .unwrap()
        })
        .collect()
}

/// Equirectangular distance from `p` to the segment `a`-`b`, projected
/// around the segment's mean latitude. Returns (fraction along, lateral m).
pub fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let m_per_deg = R * std::f64::consts::PI / 180.0;
    let lat0 = (a.0 + b.0) / 2.0;
    let sx = m_per_deg * lat0.to_radians().cos();
    let to_xy = |q: (f64, f64)| ((q.1 - a.1) * sx, (q.0 - lat0) * m_per_deg);
    let (a, b, p) = (to_xy(a), to_xy(b), to_xy(p));
    let ab = (b.0 - a.0, b.1 - a.1);
    let ap = (p.0 - a.0, p.1 - a.1);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    let t = if len2 == 0.0 { 0.0 } else { ((ap.0 * ab.0 + ap.1 * ab.1) / len2).clamp(0.0, 1.0) };
    let c = (a.0 + t * ab.0, a.1 + t * ab.1);
    (t, (p.0 - c.0).hypot(p.1 - c.1))
}

/// Ids of `pois` within `corridor_m` of the stretch `[start, start+len]`
/// of the polyline `pts` (lat, lon), with arc length by haversine and
/// window ends placed by linear interpolation in lat/lon.
pub fn corridor_oracle(pois: &[Poi], pts: &[(f64, f64)], start: f64, len: f64, corridor_m: f64) -> BTreeSet<String> {
    let mut pieces = Vec::new();
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let seg = haversine(w[0].0, w[0].1, w[1].0, w[1].1);
        let (lo, hi) = (start.max(acc), (start + len).min(acc + seg));
        if hi > lo {
            let at = |d: f64| {
                if d == acc {
                    w[0]
                } else if d == acc + seg {
                    w[1]
                } else {
                    let f = (d - acc) / seg;
                    (w[0].0 + f * (w[1].0 - w[0].0), w[0].1 + f * (w[1].1 - w[0].1))
                }
            };
            pieces.push((at(lo), at(hi)));
        }
        acc += seg;
    }
    pois.iter()
        .filter(|p| {
            let q = (p.position().lat(), p.position().lon());
            pieces.iter().any(|(a, b)| segment_distance(q, *a, *b).1 <= corridor_m)
        })
        .map(|p| p.id().to_owned())
        .collect()
}

/// A context described by plain values, so oracles can score pairs without
/// going through the library's snapshot type.
#[derive(Debug, Clone, PartialEq)]
pub struct Ctx {
    pub interests: [f64; 4],
    pub style: usize,
    pub motivation: usize,
    pub stimulus: usize,
    pub limitations: BTreeSet<String>,
    pub mode: usize,
    pub goal: usize,
    pub params: Vec<(&'static str, String)>,
    pub device: usize,
    pub companions: u32,
    pub companion_kinds: BTreeSet<String>,
    pub second_of_day: u32,
    pub lat: f64,
    pub lon: f64,
    pub weather: usize,
    pub indoor: bool,
    pub crowded: bool,
    pub ui: usize,
    pub network: bool,
    pub battery: f64,
    pub strategic: Option<usize>,
    pub historical: BTreeSet<String>,
}

pub const STYLES: [&str; 4] = ["activist", "reflective", "theorist", "pragmatic"];
pub const MOTIVATION: [&str; 3] = ["low", "medium", "high"];
pub const STIMULI: [&str; 3] = ["visual", "auditory", "kinaesthetic"];
pub const MODES: [&str; 2] = ["static", "dynamic"];
pub const GOALS: [&str; 3] = ["explore_area", "reach_poi", "find_nearest"];
pub const DEVICES: [&str; 5] = ["mobile_phone", "gipix", "pda", "laptop", "desktop"];
pub const WEATHER: [&str; 3] = ["sunny", "rain", "unknown"];
pub const UI: [&str; 2] = ["textual", "graphical"];
pub const STRATEGIC: [&str; 2] = ["exam", "leisure"];

fn subset(rng: &mut ChaCha8Rng, pool: &[&str]) -> BTreeSet<String> {
    pool.iter().filter(|_| rng.gen_bool(0.4)).map(|s| s.to_string()).collect()
}

impl Ctx {
    /// Values drawn from small pools so that collisions between samples are
    /// common, and positions within about 20 km of (47.6, 26.2).
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let mut interests = [0.0; 4];
        for v in &mut interests {
            *v = f64::from(rng.gen_range(0..=20u8)) / 20.0;
        }
        if interests.iter().all(|v| *v == 0.0) {
            interests[0] = 0.5;
        }
        let goal = rng.gen_range(0..GOALS.len());
        let params = match GOALS[goal] {
            "explore_area" => vec![("task.radius", ["5000", "10000"][rng.gen_range(0..2)].to_owned())],
            "find_nearest" => vec![("task.category", ["museum", "gas_station"][rng.gen_range(0..2)].to_owned())],
            _ => vec![],
        };
        Self {
            interests,
            style: rng.gen_range(0..STYLES.len()),
            motivation: rng.gen_range(0..MOTIVATION.len()),
            stimulus: rng.gen_range(0..STIMULI.len()),
            limitations: subset(rng, &["wheelchair", "hearing", "vision"]),
            mode: rng.gen_range(0..MODES.len()),
            goal,
            params,
            device: rng.gen_range(0..DEVICES.len()),
            companions: rng.gen_range(0..3),
            companion_kinds: subset(rng, &["family", "friends", "class"]),
            second_of_day: rng.gen_range(0..86_400),
            lat: 47.6 + rng.gen_range(-0.2..0.2),
            lon: 26.2 + rng.gen_range(-0.2..0.2),
            weather: rng.gen_range(0..WEATHER.len()),
            indoor: rng.gen_bool(0.5),
            crowded: rng.gen_bool(0.5),
            ui: rng.gen_range(0..UI.len()),
            network: rng.gen_bool(0.5),
            battery: f64::from(rng.gen_range(0..=10u8)) / 10.0,
            strategic: rng.gen_bool(0.5).then(|| rng.gen_range(0..STRATEGIC.len())),
            historical: subset(rng, &["putna", "voronet", "humor", "arbore"]),
        }
    }

    pub fn raw(&self) -> RawContext {
        let list = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(",");
        let i = self.interests;
        let mut r = RawContext::new()
            .with("personal.interests", format!("{},{},{},{}", i[0], i[1], i[2], i[3]))
            .with("personal.learning_style", STYLES[self.style])
            .with("personal.motivation", MOTIVATION[self.motivation])
            .with("personal.preferred_stimuli", STIMULI[self.stimulus])
            .with("task.operating_mode", MODES[self.mode])
            .with("task.goal_class", GOALS[self.goal])
            .with("device", DEVICES[self.device])
            .with("social.companions", self.companions.to_string())
            .with(
                "spatio_temporal.timestamp",
                format!(
                    "2026-06-01T{:02}:{:02}:{:02}Z",
                    self.second_of_day / 3600,
                    self.second_of_day / 60 % 60,
                    self.second_of_day % 60
                ),
            )
            .with("spatio_temporal.lat", self.lat.to_string())
            .with("spatio_temporal.lon", self.lon.to_string())
            .with("environmental.weather", WEATHER[self.weather])
            .with("environmental.indoor", self.indoor.to_string())
            .with("environmental.crowded", self.crowded.to_string())
            .with("user_interface", UI[self.ui])
            .with("infrastructure.network", self.network.to_string())
            .with("infrastructure.battery", self.battery.to_string());
        for (k, v) in &self.params {
            r.set(*k, v.clone());
        }
        if !self.limitations.is_empty() {
            r.set("personal.limitations", list(&self.limitations));
        }
        if !self.companion_kinds.is_empty() {
            r.set("social.companion_kinds", list(&self.companion_kinds));
        }
        if let Some(s) = self.strategic {
            r.set("strategic", STRATEGIC[s]);
        }
        if !self.historical.is_empty() {
            r.set("historical", list(&self.historical));
        }
        r
    }

    pub fn snapshot(&self) -> ContextSnapshot {
        validate_instance(&ContextTemplate::standard(), &self.raw()).expect("generated context validates")
    }
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

fn same<T: PartialEq>(a: T, b: T) -> f64 {
    f64::from(u8::from(a == b))
}

fn avg(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Per-facet scores in the order personal, task, device, social,
/// spatio-temporal, environmental, user interface, infrastructure,
/// strategic, historical.
pub fn oracle_facets(a: &Ctx, b: &Ctx, decay_m: f64) -> [f64; 10] {
    let l1: f64 = a.interests.iter().zip(&b.interests).map(|(x, y)| (x - y).abs()).sum();
    let gap = a.second_of_day.abs_diff(b.second_of_day) as f64;
    let gap = gap.min(86_400.0 - gap);
    [
        avg(&[
            1.0 - l1 / 4.0,
            same(a.style, b.style),
            1.0 - (a.motivation as f64 - b.motivation as f64).abs() / 2.0,
            same(a.stimulus, b.stimulus),
            jaccard(&a.limitations, &b.limitations),
        ]),
        if a.goal != b.goal {
            0.0
        } else {
            avg(&[1.0, same(a.mode, b.mode), same(&a.params, &b.params)])
        },
        same(a.device, b.device),
        avg(&[same(a.companions, b.companions), jaccard(&a.companion_kinds, &b.companion_kinds)]),
        avg(&[(-haversine(a.lat, a.lon, b.lat, b.lon) / decay_m).exp(), 1.0 - gap / 43_200.0]),
        avg(&[same(a.weather, b.weather), same(a.indoor, b.indoor), same(a.crowded, b.crowded)]),
        same(a.ui, b.ui),
        avg(&[same(a.network, b.network), 1.0 - (a.battery - b.battery).abs()]),
        same(a.strategic, b.strategic),
        jaccard(&a.historical, &b.historical),
    ]
}

pub fn oracle_similarity(a: &Ctx, b: &Ctx, weights: &[f64; 10], decay_m: f64) -> f64 {
    let s = oracle_facets(a, b, decay_m);
    let den: f64 = weights.iter().sum();
    weights.iter().zip(s).map(|(w, s)| w * s).sum::<f64>() / den
}

pub const DEFAULT_WEIGHTS: [f64; 10] = [0.25, 0.3, 0.05, 0.05, 0.2, 0.05, 0.025, 0.025, 0.025, 0.025];
