use std::fmt::Write as _;

use chrono::Duration;

use super::EngineError;
use crate::cases::{DemotionRule, GeneralizeParams};
use crate::context::{ChangePolicy, FacetId, FacetWeights, SimilarityParams};
use crate::learning::CloudOptions;
use crate::text::{content_lines, parse_f64, split_kv};

/// Engine tuning. Loadable from `key=value` lines; every key is optional.
///
/// | key | default |
/// |---|---|
/// | `theta` | 0.75 |
/// | `k` | 3 |
/// | `weight.<facet>` | see [`FacetWeights::default`] |
/// | `spatial_decay_m` | 5000 |
/// | `min_relevance` | 0.2 |
/// | `max_points` | 10 |
/// | `change.distance_m` | 100 |
/// | `change.time_s` | 900 |
/// | `demotion.min_uses` | 3 |
/// | `demotion.max_outcome` | 0.2 |
/// | `generalize.min_members` | 5 |
/// | `generalize.cohesion` | 0.6 |
/// | `reach.default_radius_m` | 50000 |
/// | `bus.hop_budget` | 10000 |
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub theta: f64,
    pub k: usize,
    pub weights: FacetWeights,
    pub similarity: SimilarityParams,
    pub min_relevance: f64,
    pub max_points: usize,
    pub change: ChangePolicy,
    pub demotion: DemotionRule,
    pub generalize_min_members: usize,
    pub generalize_cohesion: f64,
    pub reach_default_radius_m: f64,
    pub hop_budget: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            theta: 0.75,
            k: 3,
            weights: FacetWeights::default(),
            similarity: SimilarityParams::default(),
            min_relevance: 0.2,
            max_points: 10,
            change: ChangePolicy::default(),
            demotion: DemotionRule::default(),
            generalize_min_members: 5,
            generalize_cohesion: 0.6,
            reach_default_radius_m: 50_000.0,
            hop_budget: 10_000,
        }
    }
}

fn unit(v: f64) -> Result<f64, String> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} outside [0, 1]"))
    }
}

fn positive(v: f64) -> Result<f64, String> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn count(s: &str) -> Result<usize, String> {
    s.parse::<usize>().map_err(|_| format!("expected a non-negative integer, got {s:?}"))
}

impl EngineConfig {
    pub fn cloud_options(&self) -> CloudOptions {
        CloudOptions::new(self.min_relevance, self.max_points)
    }

    pub fn generalize_params(&self) -> GeneralizeParams {
        GeneralizeParams {
            min_members: self.generalize_min_members,
            cohesion: self.generalize_cohesion,
            weights: self.weights,
            similarity: self.similarity,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(format!("theta {} outside (0, 1]", self.theta));
        }
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if self.generalize_min_members == 0 {
            return Err("generalize.min_members must be at least 1".into());
        }
        if self.hop_budget == 0 {
            return Err("bus.hop_budget must be at least 1".into());
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, EngineError> {
        let mut c = Self::default();
        let mut raw_weights = c.weights.raw();
        let mut weights_set = false;
        for (line, content) in content_lines(text) {
            let fail = |reason: String| EngineError::Config { line, reason };
            let (key, value) = split_kv(content).ok_or_else(|| fail("expected key=value".into()))?;
            let num = || parse_f64(value).map_err(fail);
            let set = |r: Result<f64, String>| r.map_err(|e| fail(format!("{key}: {e}")));
            match key {
                "theta" => c.theta = num()?,
                "k" => c.k = count(value).map_err(fail)?,
                "spatial_decay_m" => c.similarity.spatial_decay_m = set(positive(num()?))?,
                "min_relevance" => c.min_relevance = set(unit(num()?))?,
                "max_points" => c.max_points = count(value).map_err(fail)?,
                "change.distance_m" => c.change.distance_m = set(positive(num()?))?,
                "change.time_s" => {
                    let s = set(positive(num()?))?;
                    c.change.elapsed = Duration::milliseconds((s * 1000.0).round() as i64);
                }
                "demotion.min_uses" => {
                    c.demotion.min_uses = value.parse().map_err(|_| fail(format!("bad count {value:?}")))?
                }
                "demotion.max_outcome" => c.demotion.max_outcome = set(unit(num()?))?,
                "generalize.min_members" => c.generalize_min_members = count(value).map_err(fail)?,
                "generalize.cohesion" => c.generalize_cohesion = set(unit(num()?))?,
                "reach.default_radius_m" => c.reach_default_radius_m = set(positive(num()?))?,
                "bus.hop_budget" => c.hop_budget = count(value).map_err(fail)?,
                other => match other.strip_prefix("weight.").map(str::parse::<FacetId>) {
                    Some(Ok(f)) => {
                        let w = num()?;
                        if !(w >= 0.0) {
                            return Err(fail(format!("{key}: {w} is negative")));
                        }
                        raw_weights[f.index()] = w;
                        weights_set = true;
                    }
                    _ => return Err(fail(format!("unknown key {other:?}"))),
                },
            }
        }
        if weights_set {
            c.weights = FacetWeights::new(raw_weights).map_err(|e| EngineError::Config {
                line: 0,
                reason: e.to_string(),
            })?;
        }
        c.check().map_err(|reason| EngineError::Config { line: 0, reason })?;
        Ok(c)
    }

    /// Every key, in the order of the table above.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "theta={}", self.theta);
        let _ = writeln!(s, "k={}", self.k);
        for f in FacetId::ALL {
            let _ = writeln!(s, "weight.{f}={}", self.weights.raw()[f.index()]);
        }
        let _ = writeln!(s, "spatial_decay_m={}", self.similarity.spatial_decay_m);
        let _ = writeln!(s, "min_relevance={}", self.min_relevance);
        let _ = writeln!(s, "max_points={}", self.max_points);
        let _ = writeln!(s, "change.distance_m={}", self.change.distance_m);
        let _ = writeln!(
            s,
            "change.time_s={}",
            self.change.elapsed.num_milliseconds() as f64 / 1000.0
        );
        let _ = writeln!(s, "demotion.min_uses={}", self.demotion.min_uses);
        let _ = writeln!(s, "demotion.max_outcome={}", self.demotion.max_outcome);
        let _ = writeln!(s, "generalize.min_members={}", self.generalize_min_members);
        let _ = writeln!(s, "generalize.cohesion={}", self.generalize_cohesion);
        let _ = writeln!(s, "reach.default_radius_m={}", self.reach_default_radius_m);
        let _ = writeln!(s, "bus.hop_budget={}", self.hop_budget);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = EngineConfig::default();
        assert_eq!(EngineConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(EngineConfig::parse("").unwrap(), c);
    }

    #[test]
    fn overrides() {
        let c = EngineConfig::parse("# tuned\ntheta=0.9\nk=5\nweight.device=0\nchange.time_s=60\n").unwrap();
        assert_eq!(c.theta, 0.9);
        assert_eq!(c.k, 5);
        assert_eq!(c.weights.get(FacetId::Device), 0.0);
        assert_eq!(c.change.elapsed, Duration::seconds(60));
        assert_eq!(EngineConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects() {
        for bad in ["theta=0", "theta=1.5", "k=0", "nope=1", "min_relevance=2", "weight.bogus=1", "k"] {
            assert!(EngineConfig::parse(bad).is_err(), "{bad}");
        }
        let all_zero: String = FacetId::ALL.iter().map(|f| format!("weight.{f}=0\n")).collect();
        assert!(EngineConfig::parse(&all_zero).is_err());
    }
}
