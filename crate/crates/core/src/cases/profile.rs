use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::context::similarity::{
    eq, interest_similarity, jaccard, mean, ordinal_similarity, position_similarity, seconds_of_day,
    time_of_day_similarity, weighted,
};
use crate::context::{
    ContextSnapshot, DeviceKind, FacetId, FacetWeights, GoalClass, GoalParams, LearningStyle, Modality,
    OperatingMode, SimilarityParams, Stimulus,
};
use crate::geo::GeoPoint;

/// Closed numeric interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    min: f64,
    max: f64,
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = String;

    fn try_from([min, max]: [f64; 2]) -> Result<Self, String> {
        Interval::new(min, max)
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.min, i.max]
    }
}

impl Interval {
    pub fn new(min: f64, max: f64) -> Result<Self, String> {
        if !min.is_finite() || !max.is_finite() || min > max {
            return Err(format!("bad interval [{min}, {max}]"));
        }
        Ok(Self { min, max })
    }

    pub fn point(v: f64) -> Self {
        Self { min: v, max: v }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }

    /// Nearest value inside the interval.
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    fn extend(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }
}

/// Aggregated context of several point cases: intervals over numeric fields
/// and observed value sets over categorical ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextProfile {
    pub interests: [Interval; 4],
    pub learning_style: BTreeSet<LearningStyle>,
    /// Motivation rank, 0 to 2.
    pub motivation: Interval,
    pub preferred_stimuli: BTreeSet<Stimulus>,
    pub limitation_tags: BTreeSet<BTreeSet<String>>,
    pub operating_mode: BTreeSet<OperatingMode>,
    pub goal_class: BTreeSet<GoalClass>,
    /// Distinct parameter sets, first member first.
    pub goal_params: Vec<GoalParams>,
    pub device: BTreeSet<DeviceKind>,
    pub companions: Interval,
    pub companion_kinds: BTreeSet<BTreeSet<String>>,
    pub lat: Interval,
    pub lon: Interval,
    /// Seconds since midnight UTC.
    pub time_of_day_s: Interval,
    pub weather: BTreeSet<String>,
    pub indoor: BTreeSet<bool>,
    pub crowded: BTreeSet<bool>,
    pub user_interface: BTreeSet<Modality>,
    pub network: BTreeSet<bool>,
    pub battery: Interval,
    pub strategic: BTreeSet<Option<String>>,
    pub historical: BTreeSet<BTreeSet<String>>,
    pub member_count: usize,
}

fn one<T: Ord>(v: T) -> BTreeSet<T> {
    BTreeSet::from([v])
}

fn hit<T: Ord>(set: &BTreeSet<T>, v: &T) -> f64 {
    if set.contains(v) {
        1.0
    } else {
        0.0
    }
}

fn best_jaccard(sets: &BTreeSet<BTreeSet<String>>, v: &BTreeSet<String>) -> f64 {
    sets.iter().map(|s| jaccard(s, v)).fold(0.0, f64::max)
}

impl ContextProfile {
    /// Degenerate profile of a single snapshot.
    pub fn of(s: &ContextSnapshot) -> Self {
        let p = &s.personal;
        let iv = p.interests.values();
        Self {
            interests: iv.map(Interval::point),
            learning_style: one(p.learning_style),
            motivation: Interval::point(f64::from(p.motivation.rank())),
            preferred_stimuli: one(p.preferred_stimuli),
            limitation_tags: one(p.limitation_tags.clone()),
            operating_mode: one(s.task.operating_mode),
            goal_class: one(s.task.goal_class),
            goal_params: vec![s.task.goal_params.clone()],
            device: one(s.device),
            companions: Interval::point(f64::from(s.social.companions)),
            companion_kinds: one(s.social.companion_kinds.clone()),
            lat: Interval::point(s.position().lat()),
            lon: Interval::point(s.position().lon()),
            time_of_day_s: Interval::point(seconds_of_day(&s.timestamp())),
            weather: one(s.environmental.weather.clone()),
            indoor: one(s.environmental.indoor),
            crowded: one(s.environmental.crowded),
            user_interface: one(s.user_interface),
            network: one(s.infrastructure.network),
            battery: Interval::point(s.infrastructure.battery),
            strategic: one(s.strategic.clone()),
            historical: one(s.historical.clone()),
            member_count: 1,
        }
    }

    /// Profile of a non-empty group of snapshots.
    pub fn aggregate<'a>(members: impl IntoIterator<Item = &'a ContextSnapshot>) -> Option<Self> {
        let mut it = members.into_iter();
        let mut prof = Self::of(it.next()?);
        for s in it {
            prof.absorb(s);
        }
        Some(prof)
    }

    fn absorb(&mut self, s: &ContextSnapshot) {
        let p = &s.personal;
        for (i, v) in self.interests.iter_mut().zip(p.interests.values()) {
            i.extend(v);
        }
        self.learning_style.insert(p.learning_style);
        self.motivation.extend(f64::from(p.motivation.rank()));
        self.preferred_stimuli.insert(p.preferred_stimuli);
        self.limitation_tags.insert(p.limitation_tags.clone());
        self.operating_mode.insert(s.task.operating_mode);
        self.goal_class.insert(s.task.goal_class);
        if !self.goal_params.contains(&s.task.goal_params) {
            self.goal_params.push(s.task.goal_params.clone());
        }
        self.device.insert(s.device);
        self.companions.extend(f64::from(s.social.companions));
        self.companion_kinds.insert(s.social.companion_kinds.clone());
        self.lat.extend(s.position().lat());
        self.lon.extend(s.position().lon());
        self.time_of_day_s.extend(seconds_of_day(&s.timestamp()));
        self.weather.insert(s.environmental.weather.clone());
        self.indoor.insert(s.environmental.indoor);
        self.crowded.insert(s.environmental.crowded);
        self.user_interface.insert(s.user_interface);
        self.network.insert(s.infrastructure.network);
        self.battery.extend(s.infrastructure.battery);
        self.strategic.insert(s.strategic.clone());
        self.historical.insert(s.historical.clone());
        self.member_count += 1;
    }

    /// True when every numeric value of `s` lies in its interval and every
    /// categorical value was observed.
    pub fn covers(&self, s: &ContextSnapshot) -> bool {
        let p = &s.personal;
        self.interests.iter().zip(p.interests.values()).all(|(i, v)| i.contains(v))
            && self.learning_style.contains(&p.learning_style)
            && self.motivation.contains(f64::from(p.motivation.rank()))
            && self.preferred_stimuli.contains(&p.preferred_stimuli)
            && self.limitation_tags.contains(&p.limitation_tags)
            && self.operating_mode.contains(&s.task.operating_mode)
            && self.goal_class.contains(&s.task.goal_class)
            && self.goal_params.contains(&s.task.goal_params)
            && self.device.contains(&s.device)
            && self.companions.contains(f64::from(s.social.companions))
            && self.companion_kinds.contains(&s.social.companion_kinds)
            && self.lat.contains(s.position().lat())
            && self.lon.contains(s.position().lon())
            && self.time_of_day_s.contains(seconds_of_day(&s.timestamp()))
            && self.weather.contains(&s.environmental.weather)
            && self.indoor.contains(&s.environmental.indoor)
            && self.crowded.contains(&s.environmental.crowded)
            && self.user_interface.contains(&s.user_interface)
            && self.network.contains(&s.infrastructure.network)
            && self.battery.contains(s.infrastructure.battery)
            && self.strategic.contains(&s.strategic)
            && self.historical.contains(&s.historical)
    }

    /// Structural checks used when loading: non-empty sets, sane ranges.
    pub fn check(&self) -> Result<(), String> {
        let empty = [
            ("learning_style", self.learning_style.is_empty()),
            ("preferred_stimuli", self.preferred_stimuli.is_empty()),
            ("limitation_tags", self.limitation_tags.is_empty()),
            ("operating_mode", self.operating_mode.is_empty()),
            ("goal_class", self.goal_class.is_empty()),
            ("goal_params", self.goal_params.is_empty()),
            ("device", self.device.is_empty()),
            ("companion_kinds", self.companion_kinds.is_empty()),
            ("weather", self.weather.is_empty()),
            ("indoor", self.indoor.is_empty()),
            ("crowded", self.crowded.is_empty()),
            ("user_interface", self.user_interface.is_empty()),
            ("network", self.network.is_empty()),
            ("strategic", self.strategic.is_empty()),
            ("historical", self.historical.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(format!("profile set {name} is empty"));
        }
        let ranges = [
            ("interests", self.interests.iter().all(|i| i.min >= 0.0 && i.max <= 1.0)),
            ("motivation", self.motivation.min >= 0.0 && self.motivation.max <= 2.0),
            ("companions", self.companions.min >= 0.0),
            ("lat", self.lat.min >= -90.0 && self.lat.max <= 90.0),
            ("lon", self.lon.min >= -180.0 && self.lon.max < 180.0),
            ("time_of_day_s", self.time_of_day_s.min >= 0.0 && self.time_of_day_s.max < 86_400.0),
            ("battery", self.battery.min >= 0.0 && self.battery.max <= 1.0),
        ];
        if let Some((name, _)) = ranges.iter().find(|(_, ok)| !ok) {
            return Err(format!("profile interval {name} out of range"));
        }
        if self.member_count == 0 {
            return Err("profile has no members".to_owned());
        }
        Ok(())
    }

    /// Per-facet similarity of a query snapshot to this profile. Numeric
    /// values are clamped into their interval and scored with the snapshot
    /// rule against the clamped value, so anything inside scores 1.
    /// Categorical values score 1 when observed; sets take the best Jaccard
    /// over the observed sets.
    pub fn facet_similarity(&self, q: &ContextSnapshot, facet: FacetId, params: &SimilarityParams) -> f64 {
        let s = match facet {
            FacetId::Personal => {
                let p = &q.personal;
                let qi = p.interests.values();
                let mut ci = qi;
                for (c, i) in ci.iter_mut().zip(&self.interests) {
                    *c = i.clamp(*c);
                }
                let m = f64::from(p.motivation.rank());
                mean(&[
                    interest_similarity(&qi, &ci),
                    hit(&self.learning_style, &p.learning_style),
                    ordinal_similarity(m, self.motivation.clamp(m)),
                    hit(&self.preferred_stimuli, &p.preferred_stimuli),
                    best_jaccard(&self.limitation_tags, &p.limitation_tags),
                ])
            }
            FacetId::Task if !self.goal_class.contains(&q.task.goal_class) => 0.0,
            FacetId::Task => mean(&[
                1.0,
                hit(&self.operating_mode, &q.task.operating_mode),
                if self.goal_params.contains(&q.task.goal_params) { 1.0 } else { 0.0 },
            ]),
            FacetId::Device => hit(&self.device, &q.device),
            FacetId::Social => {
                let c = f64::from(q.social.companions);
                mean(&[
                    eq(&c, &self.companions.clamp(c)),
                    best_jaccard(&self.companion_kinds, &q.social.companion_kinds),
                ])
            }
            FacetId::SpatioTemporal => {
                let pos = q.position();
                let nearest = GeoPoint::new(self.lat.clamp(pos.lat()), self.lon.clamp(pos.lon()))
                    .expect("clamped into a valid interval");
                let t = seconds_of_day(&q.timestamp());
                mean(&[
                    position_similarity(&pos, &nearest, params),
                    time_of_day_similarity(t, self.time_of_day_s.clamp(t)),
                ])
            }
            FacetId::Environmental => mean(&[
                hit(&self.weather, &q.environmental.weather),
                hit(&self.indoor, &q.environmental.indoor),
                hit(&self.crowded, &q.environmental.crowded),
            ]),
            FacetId::UserInterface => hit(&self.user_interface, &q.user_interface),
            FacetId::Infrastructure => {
                let b = q.infrastructure.battery;
                mean(&[
                    hit(&self.network, &q.infrastructure.network),
                    1.0 - (b - self.battery.clamp(b)).abs(),
                ])
            }
            FacetId::Strategic => hit(&self.strategic, &q.strategic),
            FacetId::Historical => best_jaccard(&self.historical, &q.historical),
        };
        s.clamp(0.0, 1.0)
    }

    pub fn similarity(&self, q: &ContextSnapshot, weights: &FacetWeights, params: &SimilarityParams) -> f64 {
        weighted(weights, |f| self.facet_similarity(q, f, params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{aggregate_similarity, validate_instance, ContextTemplate, RawContext};

    fn snap(lat: f64, battery: f64) -> ContextSnapshot {
        let raw = RawContext::new()
            .with("personal.interests", "0.7,0,0,0.3")
            .with("task.goal_class", "explore_area")
            .with("task.radius", "30000")
            .with("spatio_temporal.timestamp", "2026-06-01T09:00:00Z")
            .with("spatio_temporal.lat", lat.to_string())
            .with("spatio_temporal.lon", "26")
            .with("infrastructure.battery", battery.to_string());
        validate_instance(&ContextTemplate::standard(), &raw).unwrap()
    }

    #[test]
    fn interval_bounds() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
        let i = Interval::new(1.0, 2.0).unwrap();
        assert_eq!(i.clamp(5.0), 2.0);
        assert!(i.contains(1.0) && i.contains(2.0) && !i.contains(2.5));
    }

    #[test]
    fn degenerate_profile_matches_snapshot_similarity() {
        let a = snap(47.0, 0.5);
        let b = snap(47.05, 0.9);
        let prof = ContextProfile::of(&a);
        let w = FacetWeights::default();
        let p = SimilarityParams::default();
        assert_eq!(prof.similarity(&a, &w, &p), 1.0);
        let direct = aggregate_similarity(&b, &a, &w, &p);
        assert!((prof.similarity(&b, &w, &p) - direct).abs() < 1e-12);
    }

    #[test]
    fn aggregation_spans_members() {
        let members: Vec<_> = [45.0, 45.03, 45.1, 45.07].iter().map(|&l| snap(l, 0.5)).collect();
        let prof = ContextProfile::aggregate(&members).unwrap();
        assert_eq!((prof.lat.min(), prof.lat.max()), (45.0, 45.1));
        assert_eq!(prof.member_count, 4);
        assert!(members.iter().all(|m| prof.covers(m)));
        assert!(!prof.covers(&snap(45.2, 0.5)));
        let w = FacetWeights::default();
        let p = SimilarityParams::default();
        assert_eq!(prof.similarity(&snap(45.05, 0.5), &w, &p), 1.0);
        assert!(prof.similarity(&snap(45.2, 0.5), &w, &p) < 1.0);
        prof.check().unwrap();
    }

    #[test]
    fn serde_round_trip() {
        let members = [snap(45.0, 0.2), snap(45.1, 0.3)];
        let prof = ContextProfile::aggregate(&members).unwrap();
        let text = serde_json::to_string(&prof).unwrap();
        assert_eq!(serde_json::from_str::<ContextProfile>(&text).unwrap(), prof);
        assert!(serde_json::from_str::<Interval>("[2.0, 1.0]").is_err());
    }
}
