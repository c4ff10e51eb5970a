//! Great-circle geometry, points of interest and the spatial index.
//!
//! The earth is modelled as a sphere of radius [`EARTH_RADIUS_M`]. All
//! spatial predicates use inclusive bounds (`<=`).

mod io;
mod poi;
mod store;
pub(crate) mod track;

pub use io::{
    format_pois, format_track, parse_pois, parse_poi_line, parse_track, PoiIngest, RejectedLine,
};
pub use poi::{Poi, SERVICE_CATEGORIES};
pub use store::{reachable_before_dark, CorridorHit, PoiStore, SpatialHit, SpatialQuery};
pub use track::{Track, TrackPoint};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Mean earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180)")]
    Longitude(f64),
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error("invalid corridor query: {0}")]
    Corridor(String),
    #[error("speed must be positive, got {0}")]
    Speed(f64),
    #[error("invalid track: {0}")]
    Track(String),
    #[error("invalid poi: {0}")]
    Poi(String),
    #[error("duplicate poi id {0}")]
    DuplicatePoi(String),
}

/// A position on the sphere in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatLon")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !(-180.0..180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Haversine distance to `other` in meters.
    pub fn distance_to(&self, other: &GeoPoint) -> f64 {
        great_circle_distance(self, other)
    }
}

#[derive(Deserialize)]
struct LatLon {
    lat: f64,
    lon: f64,
}

impl TryFrom<LatLon> for GeoPoint {
    type Error = GeoError;

    fn try_from(v: LatLon) -> Result<Self, Self::Error> {
        GeoPoint::new(v.lat, v.lon)
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.5},{:.5}", self.lat, self.lon)
    }
}

/// Haversine great-circle distance in meters.
pub fn great_circle_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    // rounding can push h a hair above 1 for antipodes
    2.0 * EARTH_RADIUS_M * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Wraps a longitude into [-180, 180).
pub(crate) fn wrap_lon(lon: f64) -> f64 {
    let w = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if w >= 180.0 {
        -180.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn haversine_fixtures() {
        assert_eq!(great_circle_distance(&p(47.1, 26.3), &p(47.1, 26.3)), 0.0);
        let deg = great_circle_distance(&p(0.0, 0.0), &p(0.0, 1.0));
        assert!((deg - 111_194.926_644_558_73).abs() < 1e-3, "{deg}");
        let anti = great_circle_distance(&p(0.0, 0.0), &p(0.0, -180.0));
        assert!((anti - 20_015_086.796_020_57).abs() < 1e-3, "{anti}");
    }

    #[test]
    fn bounds_are_checked() {
        assert_eq!(GeoPoint::new(95.0, 0.0), Err(GeoError::Latitude(95.0)));
        assert!(GeoPoint::new(0.0, 180.0).is_err());
        assert!(GeoPoint::new(0.0, -180.0).is_ok());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn lon_wrapping() {
        assert_eq!(wrap_lon(180.0), -180.0);
        assert_eq!(wrap_lon(190.0), -170.0);
        assert_eq!(wrap_lon(-190.0), 170.0);
        assert_eq!(wrap_lon(12.5), 12.5);
    }
}
