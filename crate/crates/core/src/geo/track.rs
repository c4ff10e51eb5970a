use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{great_circle_distance, wrap_lon, GeoError, GeoPoint, EARTH_RADIUS_M};

/// Meters per degree of arc on the model sphere.
pub(crate) const M_PER_DEG: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub time: DateTime<Utc>,
    pub position: GeoPoint,
}

/// A recorded GPS track: at least two points with strictly increasing
/// timestamps. Arc length is the sum of great-circle segment lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TrackPoint>", into = "Vec<TrackPoint>")]
pub struct Track {
    points: Vec<TrackPoint>,
    cumulative: Vec<f64>,
}

impl TryFrom<Vec<TrackPoint>> for Track {
    type Error = GeoError;

    fn try_from(points: Vec<TrackPoint>) -> Result<Self, Self::Error> {
        Track::new(points)
    }
}

impl From<Track> for Vec<TrackPoint> {
    fn from(t: Track) -> Self {
        t.points
    }
}

/// Piece of a polyline between two arc-length offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SubSegment {
    pub a: GeoPoint,
    pub b: GeoPoint,
    pub start_m: f64,
    pub end_m: f64,
}

impl Track {
    pub fn new(points: Vec<TrackPoint>) -> Result<Self, GeoError> {
        if points.len() < 2 {
            return Err(GeoError::Track(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(w) = points.windows(2).find(|w| w[1].time <= w[0].time) {
            return Err(GeoError::Track(format!(
                "timestamps not strictly increasing at {}",
                w[1].time
            )));
        }
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cumulative.push(acc);
        for w in points.windows(2) {
            acc += great_circle_distance(&w[0].position, &w[1].position);
            cumulative.push(acc);
        }
        Ok(Self { points, cumulative })
    }

    pub fn points(&self) -> &[TrackPoint] {
        &self.points
    }

    /// Total arc length in meters.
    pub fn length_m(&self) -> f64 {
        *self.cumulative.last().expect("track has points")
    }

    /// Arc-length offset of every vertex.
    pub fn offsets(&self) -> &[f64] {
        &self.cumulative
    }

    /// Pieces of the polyline covering `[start_m, end_m]`. Vertices inside
    /// the window are reproduced exactly; window ends are interpolated.
    pub(crate) fn sub_segments(&self, start_m: f64, end_m: f64) -> Vec<SubSegment> {
        let mut out = Vec::new();
        for (i, w) in self.points.windows(2).enumerate() {
            let (c0, c1) = (self.cumulative[i], self.cumulative[i + 1]);
            let lo = start_m.max(c0);
            let hi = end_m.min(c1);
            if hi <= lo {
                continue;
            }
            let seg_len = c1 - c0;
            let a = if lo == c0 {
                w[0].position
            } else {
                interpolate(&w[0].position, &w[1].position, (lo - c0) / seg_len)
            };
            let b = if hi == c1 {
                w[1].position
            } else {
                interpolate(&w[0].position, &w[1].position, (hi - c0) / seg_len)
            };
            out.push(SubSegment {
                a,
                b,
                start_m: lo,
                end_m: hi,
            });
        }
        out
    }

    /// Arc-length offset and lateral distance of the polyline point nearest
    /// to `p`.
    pub fn locate(&self, p: &GeoPoint) -> (f64, f64) {
        let segs = self.sub_segments(0.0, self.length_m());
        if segs.is_empty() {
            // every vertex coincides
            return (0.0, great_circle_distance(&self.points[0].position, p));
        }
        nearest_on(&segs, p).expect("non-empty segment list")
    }
}

/// Linear interpolation in (lat, lon), taking the short way across the
/// antimeridian.
pub(crate) fn interpolate(a: &GeoPoint, b: &GeoPoint, f: f64) -> GeoPoint {
    let f = f.clamp(0.0, 1.0);
    let lat = a.lat() + f * (b.lat() - a.lat());
    let lon = wrap_lon(a.lon() + f * wrap_lon(b.lon() - a.lon()));
    GeoPoint::new(lat.clamp(-90.0, 90.0), lon).expect("interpolated point in range")
}

/// Closest approach of `p` to the segment `a`-`b`, computed in an
/// equirectangular projection centered on the segment. Returns the segment
/// parameter `t` in [0, 1] and the lateral distance in meters.
pub(crate) fn project_onto_segment(p: &GeoPoint, a: &GeoPoint, b: &GeoPoint) -> (f64, f64) {
    let lat0 = 0.5 * (a.lat() + b.lat());
    let kx = M_PER_DEG * lat0.to_radians().cos();
    let xy = |q: &GeoPoint| (wrap_lon(q.lon() - a.lon()) * kx, (q.lat() - lat0) * M_PER_DEG);
    let (ax, ay) = xy(a);
    let (bx, by) = xy(b);
    let (px, py) = xy(p);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = if t <= 0.0 {
        (ax, ay)
    } else if t >= 1.0 {
        (bx, by)
    } else {
        (ax + t * dx, ay + t * dy)
    };
    (t, (px - cx).hypot(py - cy))
}

/// Minimum over `segs` of the lateral distance from `p`; the first segment
/// attaining the minimum wins. Returns `(along_offset, lateral)`.
pub(crate) fn nearest_on(segs: &[SubSegment], p: &GeoPoint) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for s in segs {
        let (t, lateral) = project_onto_segment(p, &s.a, &s.b);
        if best.is_none_or(|(_, l)| lateral < l) {
            best = Some((s.start_m + t * (s.end_m - s.start_m), lateral));
        }
    }
    best
}
