//! Subject axes, interest scoring and the ranked learning point cloud.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::context::ContextSnapshot;
use crate::geo::{GeoError, GeoPoint, Poi, PoiStore, Track};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearningError {
    #[error("interest vector is all zero")]
    NoInterest,
    #[error("{what} weight {value} outside [0, 1]")]
    Weight { what: &'static str, value: f64 },
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// The four intertwined subject circles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubjectAxis {
    Historical,
    Geographical,
    NaturalSciences,
    Culture,
}

impl SubjectAxis {
    pub const ALL: [SubjectAxis; 4] = [
        SubjectAxis::Historical,
        SubjectAxis::Geographical,
        SubjectAxis::NaturalSciences,
        SubjectAxis::Culture,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            SubjectAxis::Historical => "h",
            SubjectAxis::Geographical => "g",
            SubjectAxis::NaturalSciences => "ns",
            SubjectAxis::Culture => "c",
        }
    }
}

impl fmt::Display for SubjectAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for SubjectAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SubjectAxis::ALL
            .into_iter()
            .find(|a| a.code() == s)
            .ok_or_else(|| format!("unknown subject axis {s:?}"))
    }
}

fn check_unit(what: &'static str, v: [f64; 4]) -> Result<[f64; 4], LearningError> {
    match v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        Some(&value) => Err(LearningError::Weight { what, value }),
        None => Ok(v),
    }
}

macro_rules! axis_vector {
    ($(#[$doc:meta])* $name:ident, $what:literal) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
        #[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
        pub struct $name([f64; 4]);

        impl $name {
            pub fn new(values: [f64; 4]) -> Result<Self, LearningError> {
                check_unit($what, values).map(Self)
            }

            pub fn values(&self) -> [f64; 4] {
                self.0
            }

            pub fn get(&self, axis: SubjectAxis) -> f64 {
                self.0[axis.index()]
            }

            pub fn any_positive(&self) -> bool {
                self.0.iter().any(|&x| x > 0.0)
            }
        }

        impl TryFrom<[f64; 4]> for $name {
            type Error = LearningError;

            fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
                Self::new(v)
            }
        }

        impl From<$name> for [f64; 4] {
            fn from(v: $name) -> Self {
                v.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{},{},{},{}", self.0[0], self.0[1], self.0[2], self.0[3])
            }
        }
    };
}

axis_vector!(
    /// How strongly a user cares about each axis, each in [0, 1].
    InterestVector,
    "interest"
);
axis_vector!(
    /// Graded membership of a POI on each axis; a POI may sit on several.
    AxisMembership,
    "membership"
);

impl InterestVector {
    pub fn is_zero(&self) -> bool {
        !self.any_positive()
    }
}

/// Normalized dot product of interests and membership. Bounded above by the
/// strongest membership.
pub fn relevance(interests: &InterestVector, membership: &AxisMembership) -> Result<f64, LearningError> {
    let w = interests.values();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(LearningError::NoInterest);
    }
    let m = membership.values();
    let score: f64 = w.iter().zip(m).map(|(wi, mi)| wi / total * mi).sum();
    Ok(score.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudEntry {
    pub poi: Poi,
    pub relevance: f64,
    /// Distance from the scope center, or along-track offset for corridors.
    pub offset_m: f64,
}

/// Total order of a cloud: relevance descending, then offset ascending,
/// then id.
pub fn cloud_order(a: &CloudEntry, b: &CloudEntry) -> Ordering {
    b.relevance
        .total_cmp(&a.relevance)
        .then_with(|| a.offset_m.total_cmp(&b.offset_m))
        .then_with(|| a.poi.id().cmp(b.poi.id()))
}

/// Ranked POIs worth visiting in a scope.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LearningPointCloud {
    entries: Vec<CloudEntry>,
}

impl LearningPointCloud {
    /// Sorts and de-duplicates (first occurrence in sorted order wins).
    pub fn from_entries(mut entries: Vec<CloudEntry>) -> Self {
        entries.sort_by(cloud_order);
        let mut seen = std::collections::BTreeSet::new();
        entries.retain(|e| seen.insert(e.poi.id().to_owned()));
        Self { entries }
    }

    pub fn entries(&self) -> &[CloudEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, poi_id: &str) -> bool {
        self.entries.iter().any(|e| e.poi.id() == poi_id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.poi.id()).collect()
    }

    pub(crate) fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    pub(crate) fn retain(&mut self, f: impl FnMut(&CloudEntry) -> bool) {
        self.entries.retain(f);
    }
}

/// Where to look for learning points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpatialScope {
    Radius {
        center: GeoPoint,
        radius_m: f64,
    },
    TrackSegment {
        track: Track,
        start_m: f64,
        length_m: f64,
        corridor_m: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudOptions {
    /// Minimum relevance (τ).
    pub min_relevance: f64,
    /// Maximum number of points (K).
    pub max_points: usize,
    /// Keep only POIs of this category.
    pub category: Option<String>,
    /// Keep only POIs with positive membership on this axis.
    pub topic: Option<SubjectAxis>,
}

impl Default for CloudOptions {
    fn default() -> Self {
        Self {
            min_relevance: 0.2,
            max_points: 10,
            category: None,
            topic: None,
        }
    }
}

impl CloudOptions {
    pub fn new(min_relevance: f64, max_points: usize) -> Self {
        Self {
            min_relevance,
            max_points,
            ..Self::default()
        }
    }

    fn admits(&self, poi: &Poi) -> bool {
        self.category.as_deref().is_none_or(|c| poi.category() == c)
            && self.topic.is_none_or(|t| poi.membership().get(t) > 0.0)
    }
}

/// Spatial query, history exclusion, relevance threshold, ranking and
/// truncation, in that order.
pub fn build_cloud(
    store: &PoiStore,
    context: &ContextSnapshot,
    scope: &SpatialScope,
    options: &CloudOptions,
) -> Result<LearningPointCloud, LearningError> {
    let interests = &context.personal.interests;
    if interests.is_zero() {
        return Err(LearningError::NoInterest);
    }
    let candidates: Vec<(&Poi, f64)> = match scope {
        SpatialScope::Radius { center, radius_m } => store
            .pois_in_radius(center, *radius_m)?
            .into_iter()
            .map(|h| (h.poi, h.distance_m))
            .collect(),
        SpatialScope::TrackSegment {
            track,
            start_m,
            length_m,
            corridor_m,
        } => store
            .pois_along_track(track, *start_m, *length_m, *corridor_m)?
            .into_iter()
            .map(|h| (h.poi, h.along_m))
            .collect(),
    };
    let mut entries = Vec::new();
    for (poi, offset_m) in candidates {
        if context.historical.contains(poi.id()) || !options.admits(poi) {
            continue;
        }
        let relevance = relevance(interests, poi.membership())?;
        if relevance < options.min_relevance {
            continue;
        }
        entries.push(CloudEntry {
            poi: poi.clone(),
            relevance,
            offset_m,
        });
    }
    let mut cloud = LearningPointCloud::from_entries(entries);
    cloud.truncate(options.max_points);
    Ok(cloud)
}

/// Single-entry cloud holding the nearest POI of a category. Service lookups
/// ignore the relevance threshold and the visit history.
pub fn nearest_cloud(
    store: &PoiStore,
    context: &ContextSnapshot,
    category: Option<&str>,
) -> Result<LearningPointCloud, LearningError> {
    let Some(hit) = store.nearest_poi(&context.spatio_temporal.position, category) else {
        return Ok(LearningPointCloud::default());
    };
    let relevance = relevance(&context.personal.interests, hit.poi.membership())?;
    Ok(LearningPointCloud::from_entries(vec![CloudEntry {
        poi: hit.poi.clone(),
        relevance,
        offset_m: hit.distance_m,
    }]))
}
