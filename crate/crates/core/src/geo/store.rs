use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::track::{nearest_on, M_PER_DEG};
use super::{great_circle_distance, GeoError, GeoPoint, Poi, Track, EARTH_RADIUS_M};

/// Grid cell edge in degrees.
const CELL_DEG: f64 = 0.01;
const CELLS_PER_DEG: f64 = 100.0;
const LON_CELL_MIN: i32 = -18_000;
const LON_CELL_MAX: i32 = 17_999;
/// Slack added around candidate boxes so float error never drops a POI.
const MARGIN_DEG: f64 = 2.0 * CELL_DEG;

type Cell = (i32, i32);

fn cell_of(p: &GeoPoint) -> Cell {
    (
        (p.lat() * CELLS_PER_DEG).floor() as i32,
        ((p.lon() * CELLS_PER_DEG).floor() as i32).min(LON_CELL_MAX),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialHit<'a> {
    pub poi: &'a Poi,
    pub distance_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorridorHit<'a> {
    pub poi: &'a Poi,
    pub along_m: f64,
    pub lateral_m: f64,
}

/// Immutable POI collection with a uniform 0.01° lat/lon grid index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoiStore {
    pois: Vec<Poi>,
    by_id: BTreeMap<String, usize>,
    grid: BTreeMap<Cell, Vec<usize>>,
}

impl PoiStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pois(pois: impl IntoIterator<Item = Poi>) -> Result<Self, GeoError> {
        let mut store = Self::new();
        for poi in pois {
            store.insert(poi)?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, poi: Poi) -> Result<(), GeoError> {
        if self.by_id.contains_key(poi.id()) {
            return Err(GeoError::DuplicatePoi(poi.id().to_owned()));
        }
        let idx = self.pois.len();
        self.by_id.insert(poi.id().to_owned(), idx);
        self.grid.entry(cell_of(&poi.position())).or_default().push(idx);
        self.pois.push(poi);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pois.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pois.is_empty()
    }

    /// POIs in insertion order.
    pub fn pois(&self) -> &[Poi] {
        &self.pois
    }

    pub fn get(&self, id: &str) -> Option<&Poi> {
        self.by_id.get(id).map(|&i| &self.pois[i])
    }

    /// Indices of POIs in every cell touching the box. Longitudes may lie
    /// outside [-180, 180); they wrap.
    fn candidates(&self, lat_lo: f64, lat_hi: f64, lon_lo: f64, lon_hi: f64, out: &mut BTreeSet<usize>) {
        let lat_lo = ((lat_lo - MARGIN_DEG).max(-90.0) * CELLS_PER_DEG).floor() as i32;
        let lat_hi = ((lat_hi + MARGIN_DEG).min(90.0) * CELLS_PER_DEG).floor() as i32;
        let (lon_lo, lon_hi) = (lon_lo - MARGIN_DEG, lon_hi + MARGIN_DEG);
        let lon_ranges: Vec<(i32, i32)> = if lon_hi - lon_lo >= 360.0 {
            vec![(LON_CELL_MIN, LON_CELL_MAX)]
        } else {
            let lo = super::wrap_lon(lon_lo);
            let hi = lo + (lon_hi - lon_lo);
            let lo_c = (lo * CELLS_PER_DEG).floor() as i32;
            let hi_c = (hi * CELLS_PER_DEG).floor() as i32;
            if hi_c > LON_CELL_MAX {
                vec![(lo_c, LON_CELL_MAX), (LON_CELL_MIN, hi_c - 36_000)]
            } else {
                vec![(lo_c, hi_c)]
            }
        };
        let box_cells: i64 = lon_ranges
            .iter()
            .map(|(a, b)| i64::from(b - a + 1))
            .sum::<i64>()
            * i64::from(lat_hi - lat_lo + 1);
        if box_cells as usize > self.grid.len() {
            for (&(clat, clon), idx) in &self.grid {
                if clat >= lat_lo
                    && clat <= lat_hi
                    && lon_ranges.iter().any(|&(a, b)| clon >= a && clon <= b)
                {
                    out.extend(idx);
                }
            }
        } else {
            for clat in lat_lo..=lat_hi {
                for &(a, b) in &lon_ranges {
                    for clon in a..=b {
                        if let Some(idx) = self.grid.get(&(clat, clon)) {
                            out.extend(idx);
                        }
                    }
                }
            }
        }
    }

    /// Longitude half-width in degrees of a box around latitude band
    /// `[lat_lo, lat_hi]` that contains every point within `meters`;
    /// `None` when the band reaches a pole and every longitude is needed.
    fn lon_halfwidth(lat_lo: f64, lat_hi: f64, meters: f64) -> Option<f64> {
        let delta = meters / EARTH_RADIUS_M;
        let worst = lat_lo.abs().max(lat_hi.abs()) + MARGIN_DEG;
        if worst >= 89.0 || delta >= std::f64::consts::FRAC_PI_2 {
            return None;
        }
        let s = delta.sin() / worst.to_radians().cos();
        if s >= 1.0 {
            None
        } else {
            Some(s.asin().to_degrees())
        }
    }

    /// POIs within `radius_m` of `center` (inclusive), nearest first, ties by id.
    pub fn pois_in_radius(&self, center: &GeoPoint, radius_m: f64) -> Result<Vec<SpatialHit<'_>>, GeoError> {
        if radius_m.is_nan() || radius_m < 0.0 {
            return Err(GeoError::NegativeRadius(radius_m));
        }
        let dlat = (radius_m / EARTH_RADIUS_M).to_degrees();
        let (lat_lo, lat_hi) = (center.lat() - dlat, center.lat() + dlat);
        let mut idx = BTreeSet::new();
        match Self::lon_halfwidth(lat_lo, lat_hi, radius_m) {
            Some(dlon) if lat_lo > -90.0 && lat_hi < 90.0 => {
                self.candidates(lat_lo, lat_hi, center.lon() - dlon, center.lon() + dlon, &mut idx)
            }
            _ => self.candidates(lat_lo, lat_hi, -180.0, 180.0, &mut idx),
        }
        let mut hits: Vec<SpatialHit<'_>> = idx
            .into_iter()
            .filter_map(|i| {
                let poi = &self.pois[i];
                let d = great_circle_distance(center, &poi.position());
                (d <= radius_m).then_some(SpatialHit { poi, distance_m: d })
            })
            .collect();
        hits.sort_by(|a, b| {
            a.distance_m
                .total_cmp(&b.distance_m)
                .then_with(|| a.poi.id().cmp(b.poi.id()))
        });
        Ok(hits)
    }

    /// POIs within `corridor_m` of the part of `track` between arc-length
    /// offsets `start_m` and `start_m + length_m`, ordered by along-track
    /// offset then id.
    pub fn pois_along_track(
        &self,
        track: &Track,
        start_m: f64,
        length_m: f64,
        corridor_m: f64,
    ) -> Result<Vec<CorridorHit<'_>>, GeoError> {
        if !(start_m >= 0.0) {
            return Err(GeoError::Corridor(format!("start offset {start_m} is negative")));
        }
        if !(length_m > 0.0) {
            return Err(GeoError::Corridor(format!("length {length_m} must be positive")));
        }
        if !(corridor_m >= 0.0) {
            return Err(GeoError::Corridor(format!("corridor {corridor_m} is negative")));
        }
        let end_m = start_m + length_m;
        if end_m > track.length_m() {
            return Err(GeoError::Corridor(format!(
                "segment end {end_m} exceeds track length {}",
                track.length_m()
            )));
        }
        let segs = track.sub_segments(start_m, end_m);
        let dlat = corridor_m / M_PER_DEG;
        let mut idx = BTreeSet::new();
        for s in &segs {
            let lat_lo = s.a.lat().min(s.b.lat()) - dlat;
            let lat_hi = s.a.lat().max(s.b.lat()) + dlat;
            let lon_a = s.a.lon();
            let lon_b = lon_a + super::wrap_lon(s.b.lon() - lon_a);
            match Self::lon_halfwidth(lat_lo, lat_hi, corridor_m) {
                Some(dlon) if lat_lo > -90.0 && lat_hi < 90.0 => self.candidates(
                    lat_lo,
                    lat_hi,
                    lon_a.min(lon_b) - dlon,
                    lon_a.max(lon_b) + dlon,
                    &mut idx,
                ),
                _ => self.candidates(lat_lo, lat_hi, -180.0, 180.0, &mut idx),
            }
        }
        let mut hits: Vec<CorridorHit<'_>> = idx
            .into_iter()
            .filter_map(|i| {
                let poi = &self.pois[i];
                let (along_m, lateral_m) = nearest_on(&segs, &poi.position())?;
                (lateral_m <= corridor_m).then_some(CorridorHit {
                    poi,
                    along_m,
                    lateral_m,
                })
            })
            .collect();
        hits.sort_by(|a, b| {
            a.along_m
                .total_cmp(&b.along_m)
                .then_with(|| a.poi.id().cmp(b.poi.id()))
        });
        Ok(hits)
    }

    /// Closest POI to `pos`, optionally restricted to one category. Ties
    /// go to the smaller id.
    pub fn nearest_poi(&self, pos: &GeoPoint, category: Option<&str>) -> Option<SpatialHit<'_>> {
        let matches = |p: &Poi| category.is_none_or(|c| p.category() == c);
        if !self.pois.iter().any(matches) {
            return None;
        }
        // Grow a disc until it holds a match: everything outside the disc is
        // farther than anything inside, so its minimum is global.
        let mut radius = 1_000.0;
        loop {
            let hits = self.pois_in_radius(pos, radius).expect("radius is positive");
            if let Some(hit) = hits.into_iter().find(|h| matches(h.poi)) {
                return Some(hit);
            }
            if radius >= std::f64::consts::PI * EARTH_RADIUS_M {
                return None;
            }
            radius *= 4.0;
        }
    }
}

/// Whether a round trip from `pos` to `poi` plus the visit itself fits
/// before `sunset`, travelling the straight-line distance at `speed_mps`.
/// The boundary is inclusive.
pub fn reachable_before_dark(
    pos: &GeoPoint,
    poi: &Poi,
    now: DateTime<Utc>,
    sunset: DateTime<Utc>,
    speed_mps: f64,
) -> Result<bool, GeoError> {
    if !(speed_mps > 0.0) || !speed_mps.is_finite() {
        return Err(GeoError::Speed(speed_mps));
    }
    if sunset < now {
        return Ok(false);
    }
    let travel_s = 2.0 * great_circle_distance(pos, &poi.position()) / speed_mps;
    let travel = Duration::nanoseconds((travel_s * 1e9).round() as i64);
    let done = now + travel + Duration::minutes(i64::from(poi.visit_min()));
    Ok(done <= sunset)
}

/// A spatial request as carried between agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpatialQuery {
    Radius {
        center: GeoPoint,
        radius_m: f64,
    },
    Corridor {
        track: Track,
        start_m: f64,
        length_m: f64,
        corridor_m: f64,
    },
    Nearest {
        from: GeoPoint,
        category: Option<String>,
    },
}

impl SpatialQuery {
    /// Runs the query, returning each POI with its distance (radius,
    /// nearest) or along-track offset (corridor).
    pub fn run(&self, store: &PoiStore) -> Result<Vec<(Poi, f64)>, GeoError> {
        Ok(match self {
            SpatialQuery::Radius { center, radius_m } => store
                .pois_in_radius(center, *radius_m)?
                .into_iter()
                .map(|h| (h.poi.clone(), h.distance_m))
                .collect(),
            SpatialQuery::Corridor {
                track,
                start_m,
                length_m,
                corridor_m,
            } => store
                .pois_along_track(track, *start_m, *length_m, *corridor_m)?
                .into_iter()
                .map(|h| (h.poi.clone(), h.along_m))
                .collect(),
            SpatialQuery::Nearest { from, category } => store
                .nearest_poi(from, category.as_deref())
                .map(|h| (h.poi.clone(), h.distance_m))
                .into_iter()
                .collect(),
        })
    }

    pub fn describe(&self) -> String {
        match self {
            SpatialQuery::Radius { center, radius_m } => format!("radius {radius_m:.0} m at {center}"),
            SpatialQuery::Corridor {
                start_m,
                length_m,
                corridor_m,
                ..
            } => format!("corridor {corridor_m:.0} m over [{start_m:.0}, {:.0}] m", start_m + length_m),
            SpatialQuery::Nearest { from, category } => {
                format!("nearest {} from {from}", category.as_deref().unwrap_or("any"))
            }
        }
    }
}
