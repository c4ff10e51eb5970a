use std::collections::BTreeSet;

use chrono::Timelike;
use serde::{Deserialize, Serialize};

use super::{named_enum, ContextSnapshot};
use crate::geo::{great_circle_distance, GeoPoint};

named_enum!(
    /// The ten dimensions of the context space.
    FacetId {
        Personal => "personal",
        Task => "task",
        Device => "device",
        Social => "social",
        SpatioTemporal => "spatio_temporal",
        Environmental => "environmental",
        UserInterface => "user_interface",
        Infrastructure => "infrastructure",
        Strategic => "strategic",
        Historical => "historical",
    }
);

impl FacetId {
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightsError {
    #[error("facet weight {0} is negative or not finite")]
    Invalid(f64),
    #[error("at least one facet weight must be positive")]
    AllZero,
}

/// Non-negative facet weights with a positive sum. Stored as given;
/// [`FacetWeights::get`] and [`FacetWeights::values`] report them
/// normalized to sum 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 10]", into = "[f64; 10]")]
pub struct FacetWeights([f64; 10]);

impl FacetWeights {
    pub fn new(raw: [f64; 10]) -> Result<Self, WeightsError> {
        if let Some(&bad) = raw.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(WeightsError::Invalid(bad));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(WeightsError::AllZero);
        }
        Ok(Self(raw))
    }

    /// Weight 1 on a single facet.
    pub fn only(facet: FacetId) -> Self {
        let mut w = [0.0; 10];
        w[facet.index()] = 1.0;
        Self(w)
    }

    fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn get(&self, facet: FacetId) -> f64 {
        self.0[facet.index()] / self.total()
    }

    pub fn values(&self) -> [f64; 10] {
        let total = self.total();
        self.0.map(|w| w / total)
    }

    /// The weights as supplied.
    pub fn raw(&self) -> [f64; 10] {
        self.0
    }
}

impl Default for FacetWeights {
    /// Interests, task and position dominate. A different goal class costs
    /// the whole task weight, which alone drops a pair below 0.75.
    fn default() -> Self {
        Self::new([0.25, 0.3, 0.05, 0.05, 0.2, 0.05, 0.025, 0.025, 0.025, 0.025]).expect("valid defaults")
    }
}

impl TryFrom<[f64; 10]> for FacetWeights {
    type Error = WeightsError;

    fn try_from(v: [f64; 10]) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<FacetWeights> for [f64; 10] {
    fn from(w: FacetWeights) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityParams {
    /// Distance at which position similarity has decayed to 1/e.
    pub spatial_decay_m: f64,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        Self {
            spatial_decay_m: 5_000.0,
        }
    }
}

const HALF_DAY_S: f64 = 43_200.0;
const DAY_S: f64 = 86_400.0;

pub fn interest_similarity(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let l1: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    1.0 - l1 / 4.0
}

/// Three-level ordinal scale: ranks 0..=2.
pub fn ordinal_similarity(a: f64, b: f64) -> f64 {
    1.0 - (a - b).abs() / 2.0
}

/// Jaccard index; two empty sets are a perfect match.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    inter / union
}

pub fn position_similarity(a: &GeoPoint, b: &GeoPoint, params: &SimilarityParams) -> f64 {
    (-great_circle_distance(a, b) / params.spatial_decay_m).exp()
}

/// Clock-time similarity on the 24 h circle; 12 h apart scores 0.
pub fn time_of_day_similarity(a_s: f64, b_s: f64) -> f64 {
    let d = (a_s - b_s).abs() % DAY_S;
    let d = d.min(DAY_S - d);
    1.0 - d.min(HALF_DAY_S) / HALF_DAY_S
}

pub(crate) fn seconds_of_day(t: &chrono::DateTime<chrono::Utc>) -> f64 {
    f64::from(t.num_seconds_from_midnight()) + f64::from(t.nanosecond()) / 1e9
}

pub(crate) fn eq<T: PartialEq>(a: &T, b: &T) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn mean(parts: &[f64]) -> f64 {
    parts.iter().sum::<f64>() / parts.len() as f64
}

/// Similarity of two snapshots on one facet, in [0, 1]. Each facet averages
/// its components: categorical values match exactly, sets by Jaccard,
/// interests by scaled L1 distance, position by exponential decay. The
/// task facet is 0 outright when the goal classes differ.
pub fn facet_similarity(a: &ContextSnapshot, b: &ContextSnapshot, facet: FacetId, params: &SimilarityParams) -> f64 {
    let s = match facet {
        FacetId::Personal => {
            let (p, q) = (&a.personal, &b.personal);
            mean(&[
                interest_similarity(&p.interests.values(), &q.interests.values()),
                eq(&p.learning_style, &q.learning_style),
                ordinal_similarity(f64::from(p.motivation.rank()), f64::from(q.motivation.rank())),
                eq(&p.preferred_stimuli, &q.preferred_stimuli),
                jaccard(&p.limitation_tags, &q.limitation_tags),
            ])
        }
        FacetId::Task if a.task.goal_class != b.task.goal_class => 0.0,
        FacetId::Task => mean(&[
            1.0,
            eq(&a.task.operating_mode, &b.task.operating_mode),
            eq(&a.task.goal_params, &b.task.goal_params),
        ]),
        FacetId::Device => eq(&a.device, &b.device),
        FacetId::Social => mean(&[
            eq(&a.social.companions, &b.social.companions),
            jaccard(&a.social.companion_kinds, &b.social.companion_kinds),
        ]),
        FacetId::SpatioTemporal => mean(&[
            position_similarity(&a.spatio_temporal.position, &b.spatio_temporal.position, params),
            time_of_day_similarity(
                seconds_of_day(&a.spatio_temporal.timestamp),
                seconds_of_day(&b.spatio_temporal.timestamp),
            ),
        ]),
        FacetId::Environmental => mean(&[
            eq(&a.environmental.weather, &b.environmental.weather),
            eq(&a.environmental.indoor, &b.environmental.indoor),
            eq(&a.environmental.crowded, &b.environmental.crowded),
        ]),
        FacetId::UserInterface => eq(&a.user_interface, &b.user_interface),
        FacetId::Infrastructure => mean(&[
            eq(&a.infrastructure.network, &b.infrastructure.network),
            1.0 - (a.infrastructure.battery - b.infrastructure.battery).abs(),
        ]),
        FacetId::Strategic => eq(&a.strategic, &b.strategic),
        FacetId::Historical => jaccard(&a.historical, &b.historical),
    };
    s.clamp(0.0, 1.0)
}

/// Weighted mean of per-facet scores under `weights`.
pub fn aggregate_similarity(
    a: &ContextSnapshot,
    b: &ContextSnapshot,
    weights: &FacetWeights,
    params: &SimilarityParams,
) -> f64 {
    weighted(weights, |f| facet_similarity(a, b, f, params))
}

/// Σ w·s / Σ w, skipping zero-weight facets. Dividing by the realised weight
/// sum makes an all-ones score exactly 1.
pub(crate) fn weighted(weights: &FacetWeights, mut score: impl FnMut(FacetId) -> f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &f in FacetId::ALL {
        let w = weights.get(f);
        if w > 0.0 {
            num += w * score(f);
            den += w;
        }
    }
    (num / den).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{validate_instance, ContextTemplate, RawContext};

    fn snap(extra: &[(&str, &str)]) -> ContextSnapshot {
        let mut raw = RawContext::new()
            .with("personal.interests", "0.7,0,0,0.3")
            .with("task.goal_class", "explore_area")
            .with("task.radius", "30000")
            .with("spatio_temporal.timestamp", "2026-06-01T09:00:00Z")
            .with("spatio_temporal.lat", "0")
            .with("spatio_temporal.lon", "0");
        for (k, v) in extra {
            raw.set(*k, *v);
        }
        validate_instance(&ContextTemplate::standard(), &raw).unwrap()
    }

    #[test]
    fn identical_snapshots_score_one_everywhere() {
        let a = snap(&[("historical", "p1,p2"), ("strategic", "exam")]);
        let params = SimilarityParams::default();
        for &f in FacetId::ALL {
            assert_eq!(facet_similarity(&a, &a, f, &params), 1.0, "{f}");
        }
        assert_eq!(aggregate_similarity(&a, &a, &FacetWeights::default(), &params), 1.0);
    }

    #[test]
    fn position_decays_to_one_over_e_at_lambda() {
        let lon = 5_000.0 / (crate::geo::EARTH_RADIUS_M * std::f64::consts::PI / 180.0);
        let a = snap(&[]);
        let b = snap(&[("spatio_temporal.lon", &lon.to_string())]);
        let s = position_similarity(&a.position(), &b.position(), &SimilarityParams::default());
        assert!((s - (-1.0f64).exp()).abs() < 1e-9, "{s}");
        assert!((s - 0.3679).abs() < 1e-4);
        let facet = facet_similarity(&a, &b, FacetId::SpatioTemporal, &SimilarityParams::default());
        assert!((facet - (s + 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn historical_is_jaccard() {
        let a = snap(&[("historical", "p1,p2")]);
        let b = snap(&[("historical", "p2,p3")]);
        let h = facet_similarity(&a, &b, FacetId::Historical, &SimilarityParams::default());
        assert!((h - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard(&BTreeSet::new(), &BTreeSet::new()), 1.0);
    }

    #[test]
    fn weighted_mean_of_two_facets() {
        // device differs (0), everything else equal (1)
        let a = snap(&[("device", "gipix")]);
        let b = snap(&[("device", "desktop")]);
        let mut raw = [0.0; 10];
        raw[FacetId::Device.index()] = 0.5;
        raw[FacetId::Historical.index()] = 0.5;
        let w = FacetWeights::new(raw).unwrap();
        assert_eq!(aggregate_similarity(&a, &b, &w, &SimilarityParams::default()), 0.5);
        // personal at 0.5 via interests (1,1,1,1) vs (0,0,0,0)... use motivation instead
        let c = snap(&[("personal.motivation", "high"), ("personal.interests", "0.7,0,0,0.3")]);
        let d = snap(&[("personal.motivation", "low")]);
        let p = facet_similarity(&c, &d, FacetId::Personal, &SimilarityParams::default());
        assert!((p - 0.8).abs() < 1e-12, "{p}");
    }

    #[test]
    fn motivation_is_ordinal() {
        assert_eq!(ordinal_similarity(2.0, 0.0), 0.0);
        assert_eq!(ordinal_similarity(2.0, 1.0), 0.5);
    }

    #[test]
    fn time_of_day_wraps_midnight() {
        assert_eq!(time_of_day_similarity(23.0 * 3600.0, 3600.0), 1.0 - 2.0 / 12.0);
        assert_eq!(time_of_day_similarity(0.0, 12.0 * 3600.0), 0.0);
    }

    #[test]
    fn weights_normalize_and_validate() {
        let w = FacetWeights::new([2.0; 10]).unwrap();
        assert!((w.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(FacetWeights::new([0.0; 10]), Err(WeightsError::AllZero));
        assert!(FacetWeights::new([-1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert_eq!("spatio_temporal".parse::<FacetId>().unwrap(), FacetId::SpatioTemporal);
        assert!("mood".parse::<FacetId>().is_err());
    }
}
