//! The case base: stored situations with their problems and solutions,
//! k-nearest retrieval, outcome tracking, generalization into prototypes,
//! and user stereotypes.

mod io;
mod profile;
mod stereotype;

pub use profile::{ContextProfile, Interval};
pub use stereotype::{format_stereotypes, match_stereotypes, parse_stereotypes, Comparator, Stereotype, Trigger};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bus::TaskPlan;
use crate::context::{
    aggregate_similarity, validate_instance, ContextSnapshot, ContextTemplate, FacetWeights, GoalClass,
    RawContext, SimilarityParams, TaskFacet,
};
use crate::learning::LearningPointCloud;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CaseError {
    #[error("duplicate case id {0:?}")]
    DuplicateId(String),
    #[error("unknown case id {0:?}")]
    UnknownId(String),
    #[error("case {id:?}: {reason}")]
    Invalid { id: String, reason: String },
    #[error("feedback {0} outside [0, 1]")]
    Feedback(f64),
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    /// Pre-classified situation supplied with the system.
    Initial,
    /// One observed situation.
    Point,
    /// Aggregate of several point cases.
    Prototypical,
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseKind::Initial => "initial",
            CaseKind::Point => "point",
            CaseKind::Prototypical => "prototypical",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseContext {
    Snapshot(Box<ContextSnapshot>),
    Profile(Box<ContextProfile>),
}

/// What was recommended: the ranked cloud and the tasks leading to it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Solution {
    pub cloud: LearningPointCloud,
    pub plan: TaskPlan,
}

impl Solution {
    /// Every plan target must be a cloud member.
    pub fn check(&self) -> Result<(), String> {
        match self.plan.targets().into_iter().find(|t| !self.cloud.contains(t)) {
            Some(t) => Err(format!("plan references {t:?}, which is not in the cloud")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: String,
    pub kind: CaseKind,
    pub context: CaseContext,
    pub problem: TaskFacet,
    pub solution: Solution,
    /// Mean feedback, counting the initial 0.5 as one observation.
    pub outcome: f64,
    pub use_count: u32,
    /// Excluded from retrieval. Never cleared.
    pub demoted: bool,
    /// Prototype aggregating this point case, if any.
    pub covered_by: Option<String>,
}

pub const INITIAL_OUTCOME: f64 = 0.5;

impl Case {
    fn from_snapshot(id: String, kind: CaseKind, context: ContextSnapshot, solution: Solution) -> Self {
        Self {
            id,
            kind,
            problem: context.task.clone(),
            context: CaseContext::Snapshot(Box::new(context)),
            solution,
            outcome: INITIAL_OUTCOME,
            use_count: 0,
            demoted: false,
            covered_by: None,
        }
    }

    pub fn point(id: impl Into<String>, context: ContextSnapshot, solution: Solution) -> Self {
        Self::from_snapshot(id.into(), CaseKind::Point, context, solution)
    }

    pub fn initial(id: impl Into<String>, context: ContextSnapshot, solution: Solution) -> Self {
        Self::from_snapshot(id.into(), CaseKind::Initial, context, solution)
    }

    pub fn snapshot(&self) -> Option<&ContextSnapshot> {
        match &self.context {
            CaseContext::Snapshot(s) => Some(s),
            CaseContext::Profile(_) => None,
        }
    }

    pub fn profile(&self) -> Option<&ContextProfile> {
        match &self.context {
            CaseContext::Profile(p) => Some(p),
            CaseContext::Snapshot(_) => None,
        }
    }

    pub fn similarity(&self, query: &ContextSnapshot, weights: &FacetWeights, params: &SimilarityParams) -> f64 {
        match &self.context {
            CaseContext::Snapshot(s) => aggregate_similarity(query, s, weights, params),
            CaseContext::Profile(p) => p.similarity(query, weights, params),
        }
    }

    pub fn validate(&self) -> Result<(), CaseError> {
        let fail = |reason: String| CaseError::Invalid {
            id: self.id.clone(),
            reason,
        };
        if self.id.is_empty() || self.id.chars().any(char::is_whitespace) {
            return Err(fail("id must be non-empty without whitespace".into()));
        }
        if !(0.0..=1.0).contains(&self.outcome) {
            return Err(fail(format!("outcome {} outside [0, 1]", self.outcome)));
        }
        match (&self.kind, &self.context) {
            (CaseKind::Prototypical, CaseContext::Profile(p)) => p.check().map_err(fail)?,
            (CaseKind::Initial | CaseKind::Point, CaseContext::Snapshot(s)) => {
                validate_instance(&ContextTemplate::open(), &RawContext::from(s.as_ref()))
                    .map_err(|e| fail(format!("context: {e}")))?;
                if s.task != self.problem {
                    return Err(fail("problem differs from the context task".into()));
                }
                if self.kind == CaseKind::Initial && self.covered_by.is_some() {
                    return Err(fail("initial cases are never covered".into()));
                }
            }
            (kind, _) => return Err(fail(format!("{kind} case with the wrong context form"))),
        }
        if self.kind == CaseKind::Prototypical && self.covered_by.is_some() {
            return Err(fail("prototypes are never covered".into()));
        }
        self.solution.check().map_err(fail)
    }
}

/// When feedback makes a case unusable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemotionRule {
    pub min_uses: u32,
    pub max_outcome: f64,
}

impl Default for DemotionRule {
    fn default() -> Self {
        Self {
            min_uses: 3,
            max_outcome: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizeParams {
    /// Smallest group that becomes a prototype (N).
    pub min_members: usize,
    /// Pairwise similarity every group member must reach.
    pub cohesion: f64,
    pub weights: FacetWeights,
    pub similarity: SimilarityParams,
}

impl Default for GeneralizeParams {
    fn default() -> Self {
        Self {
            min_members: 5,
            cohesion: 0.6,
            weights: FacetWeights::default(),
            similarity: SimilarityParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retrieved<'a> {
    pub case: &'a Case,
    pub similarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CaseBaseStats {
    pub initial: usize,
    pub point: usize,
    pub prototypical: usize,
    pub demoted: usize,
    pub covered: usize,
}

impl fmt::Display for CaseBaseStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "initial\t{}", self.initial)?;
        writeln!(f, "point\t{}", self.point)?;
        writeln!(f, "prototypical\t{}", self.prototypical)?;
        writeln!(f, "demoted\t{}", self.demoted)?;
        writeln!(f, "covered\t{}", self.covered)
    }
}

/// Cases in insertion order with an id index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CaseBase {
    cases: Vec<Case>,
    index: BTreeMap<String, usize>,
}

impl CaseBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn get(&self, id: &str) -> Option<&Case> {
        self.index.get(id).map(|&i| &self.cases[i])
    }

    fn get_mut(&mut self, id: &str) -> Result<&mut Case, CaseError> {
        match self.index.get(id) {
            Some(&i) => Ok(&mut self.cases[i]),
            None => Err(CaseError::UnknownId(id.to_owned())),
        }
    }

    pub fn add_case(&mut self, case: Case) -> Result<String, CaseError> {
        case.validate()?;
        if self.index.contains_key(&case.id) {
            return Err(CaseError::DuplicateId(case.id));
        }
        let id = case.id.clone();
        self.index.insert(id.clone(), self.cases.len());
        self.cases.push(case);
        Ok(id)
    }

    /// First unused id of the form `<prefix>-<n>` with n counting from the
    /// current size.
    pub fn fresh_id(&self, prefix: &str) -> String {
        (self.cases.len() + 1..)
            .map(|n| format!("{prefix}-{n:04}"))
            .find(|id| !self.index.contains_key(id))
            .expect("unbounded range")
    }

    /// Up to `k` non-demoted cases, most similar first, ties by id.
    pub fn retrieve_k_nearest(
        &self,
        query: &ContextSnapshot,
        weights: &FacetWeights,
        params: &SimilarityParams,
        k: usize,
    ) -> Vec<Retrieved<'_>> {
        let mut hits: Vec<Retrieved<'_>> = self
            .cases
            .iter()
            .filter(|c| !c.demoted)
            .map(|case| Retrieved {
                case,
                similarity: case.similarity(query, weights, params),
            })
            .collect();
        hits.sort_by(|a, b| {
            b.similarity
                .total_cmp(&a.similarity)
                .then_with(|| a.case.id.cmp(&b.case.id))
        });
        hits.truncate(k);
        hits
    }

    /// Folds `feedback` into the running mean and applies the demotion rule.
    /// Returns the new outcome.
    pub fn record_feedback(&mut self, id: &str, feedback: f64, rule: &DemotionRule) -> Result<f64, CaseError> {
        if !(0.0..=1.0).contains(&feedback) {
            return Err(CaseError::Feedback(feedback));
        }
        let case = self.get_mut(id)?;
        let n = f64::from(case.use_count) + 1.0;
        case.outcome = ((case.outcome * n + feedback) / (n + 1.0)).clamp(0.0, 1.0);
        case.use_count += 1;
        if case.use_count >= rule.min_uses && case.outcome < rule.max_outcome {
            case.demoted = true;
        }
        Ok(case.outcome)
    }

    /// Looks for a cohesive group of uncovered, non-demoted point cases of
    /// `goal` and folds it into a new prototype. Groups are grown greedily,
    /// seeds and candidates taken in id order. Returns the prototype id.
    pub fn generalize(&mut self, goal: GoalClass, params: &GeneralizeParams) -> Result<Option<String>, CaseError> {
        let mut pool: Vec<usize> = (0..self.cases.len())
            .filter(|&i| {
                let c = &self.cases[i];
                c.kind == CaseKind::Point && !c.demoted && c.covered_by.is_none() && c.problem.goal_class == goal
            })
            .collect();
        pool.sort_by(|&a, &b| self.cases[a].id.cmp(&self.cases[b].id));
        if pool.len() < params.min_members.max(1) {
            return Ok(None);
        }
        let snap = |i: usize| self.cases[i].snapshot().expect("point cases hold snapshots");
        let sim = |a: usize, b: usize| aggregate_similarity(snap(a), snap(b), &params.weights, &params.similarity);
        let mut group = Vec::new();
        for (si, &seed) in pool.iter().enumerate() {
            group = vec![seed];
            for &c in &pool[si + 1..] {
                if group.iter().all(|&g| sim(g, c) >= params.cohesion) {
                    group.push(c);
                }
            }
            if group.len() >= params.min_members {
                break;
            }
        }
        if group.len() < params.min_members.max(1) {
            return Ok(None);
        }
        let profile = ContextProfile::aggregate(group.iter().map(|&i| snap(i))).expect("non-empty group");
        let best = *group
            .iter()
            .max_by(|&&a, &&b| {
                let (ca, cb) = (&self.cases[a], &self.cases[b]);
                ca.outcome.total_cmp(&cb.outcome).then_with(|| cb.id.cmp(&ca.id))
            })
            .expect("non-empty group");
        let id = self.fresh_id("proto");
        let proto = Case {
            id: id.clone(),
            kind: CaseKind::Prototypical,
            context: CaseContext::Profile(Box::new(profile)),
            problem: self.cases[best].problem.clone(),
            solution: self.cases[best].solution.clone(),
            outcome: INITIAL_OUTCOME,
            use_count: 0,
            demoted: false,
            covered_by: None,
        };
        self.add_case(proto)?;
        for i in group {
            self.cases[i].covered_by = Some(id.clone());
        }
        Ok(Some(id))
    }

    pub fn stats(&self) -> CaseBaseStats {
        let mut s = CaseBaseStats::default();
        for c in &self.cases {
            match c.kind {
                CaseKind::Initial => s.initial += 1,
                CaseKind::Point => s.point += 1,
                CaseKind::Prototypical => s.prototypical += 1,
            }
            s.demoted += usize::from(c.demoted);
            s.covered += usize::from(c.covered_by.is_some());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bus::{AgentRole, PlanStep, StepAction};

    pub(crate) fn snap(lat: f64, lon: f64, interests: &str) -> ContextSnapshot {
        let raw = RawContext::new()
            .with("personal.interests", interests)
            .with("task.goal_class", "explore_area")
            .with("task.radius", "30000")
            .with("spatio_temporal.timestamp", "2026-06-01T09:00:00Z")
            .with("spatio_temporal.lat", lat.to_string())
            .with("spatio_temporal.lon", lon.to_string());
        validate_instance(&ContextTemplate::standard(), &raw).unwrap()
    }

    fn base_with(points: &[(f64, f64)]) -> CaseBase {
        let mut b = CaseBase::new();
        for (i, &(lat, lon)) in points.iter().enumerate() {
            b.add_case(Case::point(format!("c{i:02}"), snap(lat, lon, "0.7,0,0,0.3"), Solution::default()))
                .unwrap();
        }
        b
    }

    #[test]
    fn add_and_duplicate() {
        let mut b = CaseBase::new();
        b.add_case(Case::point("a", snap(47.0, 26.0, "1,0,0,0"), Solution::default())).unwrap();
        assert_eq!(b.len(), 1);
        let err = b
            .add_case(Case::point("a", snap(47.0, 26.0, "1,0,0,0"), Solution::default()))
            .unwrap_err();
        assert_eq!(err, CaseError::DuplicateId("a".into()));
        assert_eq!(b.fresh_id("case"), "case-0002");
    }

    #[test]
    fn invalid_solution_rejected() {
        let plan = TaskPlan::new(vec![PlanStep {
            agent: AgentRole::GisAgent,
            action: StepAction::Route,
            target: Some("ghost".into()),
            instruction: "go".into(),
        }]);
        let case = Case::point(
            "x",
            snap(47.0, 26.0, "1,0,0,0"),
            Solution {
                cloud: LearningPointCloud::default(),
                plan,
            },
        );
        assert!(matches!(CaseBase::new().add_case(case), Err(CaseError::Invalid { .. })));
    }

    #[test]
    fn retrieval_identity_and_bounds() {
        let b = base_with(&[(47.0, 26.0), (47.2, 26.0), (46.0, 25.0)]);
        let w = FacetWeights::default();
        let p = SimilarityParams::default();
        let hits = b.retrieve_k_nearest(&snap(47.2, 26.0, "0.7,0,0,0.3"), &w, &p, 2);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].case.id, "c01");
        assert_eq!(hits[0].similarity, 1.0);
        assert!(CaseBase::new().retrieve_k_nearest(&snap(0.0, 0.0, "1,0,0,0"), &w, &p, 3).is_empty());
    }

    #[test]
    fn ties_break_by_id() {
        let b = base_with(&[(47.0, 26.0), (47.0, 26.0)]);
        let hits = b.retrieve_k_nearest(
            &snap(47.0, 26.0, "0.7,0,0,0.3"),
            &FacetWeights::default(),
            &SimilarityParams::default(),
            5,
        );
        assert_eq!(hits.iter().map(|h| h.case.id.as_str()).collect::<Vec<_>>(), ["c00", "c01"]);
    }

    #[test]
    fn feedback_running_mean_and_demotion() {
        let mut b = base_with(&[(47.0, 26.0)]);
        let rule = DemotionRule::default();
        assert_eq!(b.record_feedback("c00", 0.0, &rule).unwrap(), 0.25);
        b.record_feedback("c00", 0.0, &rule).unwrap();
        assert!(!b.get("c00").unwrap().demoted);
        assert_eq!(b.record_feedback("c00", 0.0, &rule).unwrap(), 0.125);
        let c = b.get("c00").unwrap();
        assert_eq!(c.use_count, 3);
        assert!(c.demoted);
        assert!(b
            .retrieve_k_nearest(&snap(47.0, 26.0, "0.7,0,0,0.3"), &FacetWeights::default(), &SimilarityParams::default(), 3)
            .is_empty());
        assert_eq!(b.record_feedback("c00", 1.5, &rule), Err(CaseError::Feedback(1.5)));
        assert!(matches!(b.record_feedback("nope", 0.5, &rule), Err(CaseError::UnknownId(_))));
    }

    #[test]
    fn generalize_below_threshold() {
        let mut b = base_with(&[(45.0, 26.0); 4]);
        assert_eq!(b.generalize(GoalClass::ExploreArea, &GeneralizeParams::default()).unwrap(), None);
    }

    #[test]
    fn generalize_identical_members() {
        let mut b = base_with(&[(45.0, 26.0); 5]);
        let id = b.generalize(GoalClass::ExploreArea, &GeneralizeParams::default()).unwrap().unwrap();
        let proto = b.get(&id).unwrap();
        let prof = proto.profile().unwrap();
        assert_eq!(prof.member_count, 5);
        assert_eq!((prof.lat.min(), prof.lat.max()), (45.0, 45.0));
        assert_eq!(b.stats().covered, 5);
        assert_eq!(b.generalize(GoalClass::ExploreArea, &GeneralizeParams::default()).unwrap(), None);
        assert_eq!(b.generalize(GoalClass::FollowTrack, &GeneralizeParams::default()).unwrap(), None);
    }

    #[test]
    fn generalize_lat_spread() {
        let lats = [45.00, 45.02, 45.05, 45.10, 45.07, 45.01, 45.04];
        let pts: Vec<_> = lats.iter().map(|&l| (l, 26.0)).collect();
        let mut b = base_with(&pts);
        let id = b.generalize(GoalClass::ExploreArea, &GeneralizeParams::default()).unwrap().unwrap();
        let prof = b.get(&id).unwrap().profile().unwrap();
        assert_eq!(prof.member_count, 7);
        assert_eq!((prof.lat.min(), prof.lat.max()), (45.00, 45.10));
    }

    #[test]
    fn prototype_takes_best_solution() {
        let mut b = base_with(&[(45.0, 26.0); 5]);
        b.record_feedback("c03", 1.0, &DemotionRule::default()).unwrap();
        let id = b.generalize(GoalClass::ExploreArea, &GeneralizeParams::default()).unwrap().unwrap();
        assert_eq!(b.get(&id).unwrap().problem, b.get("c03").unwrap().problem);
    }
}
