//! Scenario files.
//!
//! ```text
//! # header: key=value
//! name=monastery-tour
//! mode=static                  # static | dynamic
//! device=gipix
//! start=2026-06-01T09:00:00Z
//! sunset=2026-06-01T19:30:00Z
//! speed_mps=13.9
//! repository=descriptions      # optional, relative to the scenario file
//! personal.interests=0.7,0,0,0.3
//! # ...any other context field except task.*, spatio_temporal.* and device
//! ---
//! # body: the request
//! goal_class=explore_area
//! radius=30000                 # also start_offset, length, corridor, category, topic
//! lat=47.6514                  # static only
//! lon=26.2556                  # static only
//! track=track.tsv              # dynamic only, relative to the scenario file
//! ```

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};

use crate::context::{DeviceKind, OperatingMode, RawContext, FIELDS};
use crate::geo::GeoPoint;
use crate::text::{content_lines, parse_f64, parse_instant, split_kv};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct ScenarioError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Static { position: GeoPoint },
    Dynamic { track: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub mode: OperatingMode,
    pub device: DeviceKind,
    pub start: DateTime<Utc>,
    pub sunset: DateTime<Utc>,
    pub speed_mps: f64,
    pub repository: Option<PathBuf>,
    /// Context fields fixed for the whole run.
    pub profile: RawContext,
    /// `task.*` fields of the request.
    pub goal: RawContext,
    pub body: Body,
}

const GOAL_KEYS: &[&str] = &["goal_class", "radius", "start_offset", "length", "corridor", "category", "topic"];

fn profile_key(key: &str) -> bool {
    key != "device"
        && !key.starts_with("task.")
        && !key.starts_with("spatio_temporal.")
        && FIELDS.iter().any(|(k, _, _)| *k == key)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut in_body = false;
        let mut name = None;
        let mut mode = None;
        let mut device = None;
        let mut start = None;
        let mut sunset = None;
        let mut speed = None;
        let mut repository = None;
        let mut profile = RawContext::new();
        let mut goal = RawContext::new();
        let mut lat = None;
        let mut lon = None;
        let mut track = None;
        let mut last_line = 0;
        for (line, content) in content_lines(text) {
            last_line = line;
            let fail = |reason: String| ScenarioError { line, reason };
            if content.trim() == "---" {
                if in_body {
                    return Err(fail("second body separator".into()));
                }
                in_body = true;
                continue;
            }
            let (k, v) = split_kv(content).ok_or_else(|| fail("expected key=value".into()))?;
            let dup = |seen: bool| if seen { Err(fail(format!("duplicate key {k:?}"))) } else { Ok(()) };
            if in_body {
                match k {
                    "lat" => {
                        dup(lat.is_some())?;
                        lat = Some(parse_f64(v).map_err(fail)?);
                    }
                    "lon" => {
                        dup(lon.is_some())?;
                        lon = Some(parse_f64(v).map_err(fail)?);
                    }
                    "track" => {
                        dup(track.is_some())?;
                        if v.is_empty() {
                            return Err(fail("empty track path".into()));
                        }
                        track = Some(PathBuf::from(v));
                    }
                    k if GOAL_KEYS.contains(&k) => {
                        let key = format!("task.{k}");
                        dup(goal.get(&key).is_some())?;
                        goal.set(key, v);
                    }
                    other => return Err(fail(format!("unknown body key {other:?}"))),
                }
                continue;
            }
            match k {
                "name" => {
                    dup(name.is_some())?;
                    name = Some(v.to_owned());
                }
                "mode" => {
                    dup(mode.is_some())?;
                    mode = Some(v.parse::<OperatingMode>().map_err(fail)?);
                }
                "device" => {
                    dup(device.is_some())?;
                    device = Some(v.parse::<DeviceKind>().map_err(fail)?);
                }
                "start" => {
                    dup(start.is_some())?;
                    start = Some(parse_instant(v).map_err(fail)?);
                }
                "sunset" => {
                    dup(sunset.is_some())?;
                    sunset = Some(parse_instant(v).map_err(fail)?);
                }
                "speed_mps" => {
                    dup(speed.is_some())?;
                    let s = parse_f64(v).map_err(fail)?;
                    if !(s > 0.0) {
                        return Err(fail(format!("speed {s} must be positive")));
                    }
                    speed = Some(s);
                }
                "repository" => {
                    dup(repository.is_some())?;
                    repository = Some(PathBuf::from(v));
                }
                k if profile_key(k) => {
                    dup(profile.get(k).is_some())?;
                    profile.set(k, v);
                }
                other => return Err(fail(format!("unknown header key {other:?}"))),
            }
        }
        let end = |reason: &str| ScenarioError {
            line: last_line,
            reason: reason.to_owned(),
        };
        if !in_body {
            return Err(end("missing --- body separator"));
        }
        let mode = mode.ok_or_else(|| end("missing mode"))?;
        if goal.get("task.goal_class").is_none() {
            return Err(end("missing goal_class"));
        }
        let body = match mode {
            OperatingMode::Static => {
                if track.is_some() {
                    return Err(end("static scenarios take lat/lon, not a track"));
                }
                let (Some(lat), Some(lon)) = (lat, lon) else {
                    return Err(end("static scenarios need lat and lon"));
                };
                Body::Static {
                    position: GeoPoint::new(lat, lon).map_err(|e| end(&e.to_string()))?,
                }
            }
            OperatingMode::Dynamic => {
                if lat.is_some() || lon.is_some() {
                    return Err(end("dynamic scenarios take a track, not lat/lon"));
                }
                Body::Dynamic {
                    track: track.ok_or_else(|| end("dynamic scenarios need a track"))?,
                }
            }
        };
        Ok(Self {
            name: name.ok_or_else(|| end("missing name"))?,
            mode,
            device: device.ok_or_else(|| end("missing device"))?,
            start: start.ok_or_else(|| end("missing start"))?,
            sunset: sunset.ok_or_else(|| end("missing sunset"))?,
            speed_mps: speed.ok_or_else(|| end("missing speed_mps"))?,
            repository,
            profile,
            goal,
            body,
        })
    }

    /// Reads a scenario file and makes its relative paths relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut s = Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        if let Some(r) = &s.repository {
            s.repository = Some(dir.join(r));
        }
        if let Body::Dynamic { track } = &mut s.body {
            *track = dir.join(&*track);
        }
        Ok(s)
    }

    /// The raw context observed at `time` and `position`.
    pub fn observation(&self, time: DateTime<Utc>, position: &GeoPoint) -> RawContext {
        let mut raw = self.profile.clone();
        for (k, v) in self.goal.iter() {
            raw.set(k, v);
        }
        raw.set("task.operating_mode", self.mode.as_str());
        raw.set("device", self.device.as_str());
        raw.set("spatio_temporal.timestamp", crate::text::format_instant(&time));
        raw.set("spatio_temporal.lat", position.lat().to_string());
        raw.set("spatio_temporal.lon", position.lon().to_string());
        raw
    }
}
