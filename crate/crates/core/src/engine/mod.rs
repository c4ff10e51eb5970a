//! The reasoning cycle: classify a situation against the case base, reuse
//! or build a solution, revise outcomes from feedback and retain new cases.

mod config;

pub use config::EngineConfig;

use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::bus::{AgentRole, PlanStep, StepAction, TaskPlan};
use crate::cases::{match_stereotypes, Case, CaseBase, CaseError, Solution, Stereotype};
use crate::context::{
    validate_instance, ContextSnapshot, ContextTemplate, FacetWeights, GoalClass, RawContext, TaskFacet,
    ValidationErrors,
};
use crate::geo::{great_circle_distance, reachable_before_dark, GeoError, PoiStore, SpatialQuery, Track};
use crate::learning::{build_cloud, nearest_cloud, LearningError, LearningPointCloud, SpatialScope};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid context: {0}")]
    Validation(ValidationErrors),
    #[error("no interest signal")]
    NoInterestSignal,
    #[error("follow_track needs an active track")]
    NoTrack,
    #[error("goal parameter {0} missing")]
    MissingParam(&'static str),
    #[error("{0}")]
    Learning(#[from] LearningError),
    #[error("{0}")]
    Geo(#[from] GeoError),
    #[error("{0}")]
    Case(#[from] CaseError),
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classification {
    Matched { case_id: String, similarity: f64 },
    /// Best similarity found, if the case base had any candidate.
    Unclassified { best: Option<f64> },
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Matched { case_id, similarity } => write!(f, "matched {case_id} at {similarity:.4}"),
            Classification::Unclassified { best: Some(b) } => write!(f, "unclassified, best {b:.4}"),
            Classification::Unclassified { best: None } => f.write_str("unclassified, no cases"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    ReusedCase(String),
    FreshSolve,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::ReusedCase(id) => write!(f, "reused {id}"),
            Source::FreshSolve => f.write_str("fresh"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub solution: Solution,
    pub source: Source,
    pub classification: Classification,
    /// The context the solution was grounded in, after stereotype defaults.
    pub context: ContextSnapshot,
    /// The spatial request the solution was drawn from.
    pub scope: SpatialQuery,
    /// Id of the point case stored for a fresh solve.
    pub retained: Option<String>,
}

/// Scenario clock used to drop plan steps the user cannot finish in daylight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Daylight {
    pub sunset: DateTime<Utc>,
    pub speed_mps: f64,
}

#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    cases: CaseBase,
    stereotypes: Vec<Stereotype>,
    template: ContextTemplate,
    store: Arc<PoiStore>,
    track: Option<Track>,
    daylight: Option<Daylight>,
}

impl Engine {
    pub fn new(config: EngineConfig, store: Arc<PoiStore>) -> Self {
        Self {
            config,
            cases: CaseBase::new(),
            stereotypes: Vec::new(),
            template: ContextTemplate::standard(),
            store,
            track: None,
            daylight: None,
        }
    }

    pub fn with_cases(mut self, cases: CaseBase) -> Self {
        self.cases = cases;
        self
    }

    pub fn with_stereotypes(mut self, stereotypes: Vec<Stereotype>) -> Self {
        self.stereotypes = stereotypes;
        self
    }

    pub fn with_template(mut self, template: ContextTemplate) -> Self {
        self.template = template;
        self
    }

    pub fn set_track(&mut self, track: Option<Track>) {
        self.track = track;
    }

    pub fn set_daylight(&mut self, daylight: Option<Daylight>) {
        self.daylight = daylight;
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn cases(&self) -> &CaseBase {
        &self.cases
    }

    pub fn into_cases(self) -> CaseBase {
        self.cases
    }

    pub fn template(&self) -> &ContextTemplate {
        &self.template
    }

    pub fn store(&self) -> &Arc<PoiStore> {
        &self.store
    }

    pub fn validate(&self, raw: &RawContext) -> Result<ContextSnapshot, EngineError> {
        validate_instance(&self.template, raw).map_err(EngineError::Validation)
    }

    /// Applies the first matching stereotype: its weights always, its
    /// interests only when the user gave none.
    pub fn personalize(&self, mut ctx: ContextSnapshot) -> Result<(ContextSnapshot, FacetWeights), EngineError> {
        let matched = match_stereotypes(&self.stereotypes, &ctx.personal, &ctx.task);
        let first = matched.first();
        if ctx.personal.interests.is_zero() {
            match first {
                Some(s) if !s.default_interests.is_zero() => ctx.personal.interests = s.default_interests,
                _ => return Err(EngineError::NoInterestSignal),
            }
        }
        let weights = first.map_or(self.config.weights, |s| s.default_weights);
        Ok((ctx, weights))
    }

    /// Matched when the nearest non-demoted case reaches θ.
    pub fn classify(&self, ctx: &ContextSnapshot, weights: &FacetWeights) -> Classification {
        let top = self
            .cases
            .retrieve_k_nearest(ctx, weights, &self.config.similarity, self.config.k);
        match top.first() {
            Some(r) if r.similarity >= self.config.theta => Classification::Matched {
                case_id: r.case.id.clone(),
                similarity: r.similarity,
            },
            Some(r) => Classification::Unclassified {
                best: Some(r.similarity),
            },
            None => Classification::Unclassified { best: None },
        }
    }

    /// Where `problem` looks when the user stands at `ctx`.
    pub fn scope(&self, ctx: &ContextSnapshot, problem: &TaskFacet) -> Result<SpatialQuery, EngineError> {
        let p = &problem.goal_params;
        let center = ctx.position();
        let need = |v: Option<f64>, name: &'static str| v.ok_or(EngineError::MissingParam(name));
        Ok(match problem.goal_class {
            GoalClass::ExploreArea => SpatialQuery::Radius {
                center,
                radius_m: need(p.radius_m, "task.radius")?,
            },
            GoalClass::ReachPoi => SpatialQuery::Radius {
                center,
                radius_m: p.radius_m.unwrap_or(self.config.reach_default_radius_m),
            },
            GoalClass::FindNearest => SpatialQuery::Nearest {
                from: center,
                category: p.category.clone(),
            },
            GoalClass::FollowTrack => {
                let track = self.track.as_ref().ok_or(EngineError::NoTrack)?;
                let total = track.length_m();
                let (along, _) = track.locate(&center);
                let start = (along + need(p.start_offset_m, "task.start_offset")?).clamp(0.0, total);
                let length = need(p.length_m, "task.length")?.min(total - start);
                SpatialQuery::Corridor {
                    track: track.clone(),
                    start_m: start,
                    length_m: length,
                    corridor_m: need(p.corridor_m, "task.corridor")?,
                }
            }
        })
    }

    fn cloud(&self, ctx: &ContextSnapshot, problem: &TaskFacet, scope: &SpatialQuery) -> Result<LearningPointCloud, EngineError> {
        let mut options = self.config.cloud_options();
        options.category = problem.goal_params.category.clone();
        options.topic = problem.goal_params.topic;
        let scope = match scope {
            SpatialQuery::Nearest { category, .. } => {
                return Ok(nearest_cloud(&self.store, ctx, category.as_deref())?);
            }
            SpatialQuery::Corridor { length_m, .. } if *length_m <= 0.0 => {
                return Ok(LearningPointCloud::default());
            }
            SpatialQuery::Radius { center, radius_m } => SpatialScope::Radius {
                center: *center,
                radius_m: *radius_m,
            },
            SpatialQuery::Corridor {
                track,
                start_m,
                length_m,
                corridor_m,
            } => SpatialScope::TrackSegment {
                track: track.clone(),
                start_m: *start_m,
                length_m: *length_m,
                corridor_m: *corridor_m,
            },
        };
        let mut cloud = build_cloud(&self.store, ctx, &scope, &options)?;
        if problem.goal_class == GoalClass::ReachPoi {
            cloud.retain(|e| self.reachable(ctx, e).unwrap_or(false));
            cloud.truncate(1);
        }
        Ok(cloud)
    }

    fn reachable(&self, ctx: &ContextSnapshot, e: &crate::learning::CloudEntry) -> Result<bool, EngineError> {
        match &self.daylight {
            Some(d) => Ok(reachable_before_dark(
                &ctx.position(),
                &e.poi,
                ctx.timestamp(),
                d.sunset,
                d.speed_mps,
            )?),
            None => Ok(true),
        }
    }

    /// For every cloud point the user can still finish before sunset, in
    /// rank order: route (GIS), background (IR), visit (Device).
    pub fn plan_tasks(&self, ctx: &ContextSnapshot, cloud: &LearningPointCloud) -> Result<TaskPlan, EngineError> {
        let mut steps = Vec::new();
        for e in cloud.entries() {
            if !self.reachable(ctx, e)? {
                continue;
            }
            let poi = &e.poi;
            let km = great_circle_distance(&ctx.position(), &poi.position()) / 1000.0;
            let target = Some(poi.id().to_owned());
            steps.push(PlanStep {
                agent: AgentRole::GisAgent,
                action: StepAction::Route,
                target: target.clone(),
                instruction: format!("head to {} ({km:.1} km)", poi.name()),
            });
            steps.push(PlanStep {
                agent: AgentRole::IrAgent,
                action: StepAction::Inform,
                target: target.clone(),
                instruction: format!("read about {}", poi.name()),
            });
            steps.push(PlanStep {
                agent: AgentRole::DeviceAgent,
                action: StepAction::Visit,
                target,
                instruction: format!("visit {} for {} min", poi.name(), poi.visit_min()),
            });
        }
        if steps.is_empty() && !cloud.is_empty() {
            steps.push(PlanStep {
                agent: AgentRole::DeviceAgent,
                action: StepAction::Notice,
                target: None,
                instruction: "no learning point can be visited before sunset".into(),
            });
        }
        Ok(TaskPlan::new(steps))
    }

    fn ground(&self, ctx: &ContextSnapshot, problem: &TaskFacet) -> Result<(Solution, SpatialQuery), EngineError> {
        let scope = self.scope(ctx, problem)?;
        let cloud = self.cloud(ctx, problem, &scope)?;
        let plan = self.plan_tasks(ctx, &cloud)?;
        Ok((Solution { cloud, plan }, scope))
    }

    /// Re-grounds a stored case at the current position with the current
    /// interests and history. Stored clouds are never replayed.
    pub fn reuse(&self, case_id: &str, ctx: &ContextSnapshot) -> Result<(Solution, SpatialQuery), EngineError> {
        let case = self
            .cases
            .get(case_id)
            .ok_or_else(|| CaseError::UnknownId(case_id.to_owned()))?;
        self.ground(ctx, &case.problem)
    }

    pub fn fresh_solution(&self, ctx: &ContextSnapshot) -> Result<(Solution, SpatialQuery), EngineError> {
        self.ground(ctx, &ctx.task)
    }

    /// Classify and solve without touching the case base.
    pub fn recommend(&self, ctx: ContextSnapshot) -> Result<Recommendation, EngineError> {
        let (ctx, weights) = self.personalize(ctx)?;
        let classification = self.classify(&ctx, &weights);
        let ((solution, scope), source) = match &classification {
            Classification::Matched { case_id, .. } => {
                (self.reuse(case_id, &ctx)?, Source::ReusedCase(case_id.clone()))
            }
            Classification::Unclassified { .. } => (self.fresh_solution(&ctx)?, Source::FreshSolve),
        };
        Ok(Recommendation {
            solution,
            source,
            classification,
            context: ctx,
            scope,
            retained: None,
        })
    }

    pub fn revise(&mut self, case_id: &str, feedback: f64) -> Result<f64, EngineError> {
        Ok(self.cases.record_feedback(case_id, feedback, &self.config.demotion)?)
    }

    /// Stores a point case, then tries to generalize its goal class.
    pub fn retain(&mut self, ctx: &ContextSnapshot, problem: &TaskFacet, solution: &Solution) -> Result<String, EngineError> {
        let id = self.cases.fresh_id("case");
        let mut case = Case::point(id, ctx.clone(), solution.clone());
        case.problem = problem.clone();
        let id = self.cases.add_case(case)?;
        self.cases
            .generalize(problem.goal_class, &self.config.generalize_params())?;
        Ok(id)
    }

    /// The full pipeline: validate, personalize, classify, reuse or solve,
    /// and retain fresh solutions.
    pub fn solve(&mut self, raw: &RawContext) -> Result<Recommendation, EngineError> {
        let ctx = self.validate(raw)?;
        self.solve_snapshot(ctx)
    }

    pub fn solve_snapshot(&mut self, ctx: ContextSnapshot) -> Result<Recommendation, EngineError> {
        let mut rec = self.recommend(ctx)?;
        if rec.source == Source::FreshSolve {
            rec.retained = Some(self.retain(&rec.context, &rec.context.task, &rec.solution)?);
        }
        Ok(rec)
    }
}
