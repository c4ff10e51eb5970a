use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::rc::Rc;
use std::sync::Arc;

use super::render::render;
use super::{Agent, AgentRole, Bus, Envelope, Notification, Outbox, Payload, Presentation, Subtask, SubtaskResult};
use crate::context::{validate_instance, ContextTemplate, GoalClass};
use crate::engine::{Engine, Source};
use crate::geo::PoiStore;

fn fail(out: &mut Outbox, message: impl Into<String>) {
    out.send(AgentRole::DeviceAgent, Payload::Presentation(Presentation::error(message)));
}

/// Turns raw observations into validated snapshots.
pub struct ContextAgent {
    template: ContextTemplate,
}

impl ContextAgent {
    pub fn new(template: ContextTemplate) -> Self {
        Self { template }
    }
}

impl Agent for ContextAgent {
    fn handle(&mut self, env: &Envelope, out: &mut Outbox) {
        let Payload::RawContext(raw) = &env.payload else {
            return fail(out, format!("context agent cannot handle {}", env.payload.kind()));
        };
        match validate_instance(&self.template, raw) {
            Ok(ctx) => out.send(AgentRole::CbrAgent, Payload::ValidatedContext(Box::new(ctx))),
            Err(e) => fail(out, format!("invalid context: {e}")),
        }
    }
}

/// Classifies and solves. Unmatched situations go to the case creator,
/// matched ones straight to the task decomposer.
pub struct CbrAgent {
    engine: Rc<RefCell<Engine>>,
}

impl CbrAgent {
    pub fn new(engine: Rc<RefCell<Engine>>) -> Self {
        Self { engine }
    }
}

impl Agent for CbrAgent {
    fn handle(&mut self, env: &Envelope, out: &mut Outbox) {
        let Payload::ValidatedContext(ctx) = &env.payload else {
            return fail(out, format!("cbr agent cannot handle {}", env.payload.kind()));
        };
        match self.engine.borrow().recommend(ctx.as_ref().clone()) {
            Ok(rec) if rec.source == Source::FreshSolve => {
                out.send(AgentRole::NewCaseCreator, Payload::Classification(Box::new(rec)))
            }
            Ok(rec) => out.send(AgentRole::TaskDecomposer, Payload::Notification(Box::new(rec.into()))),
            Err(e) => fail(out, e.to_string()),
        }
    }
}

/// Stores the fresh solution as a point case, then passes it on.
pub struct NewCaseCreator {
    engine: Rc<RefCell<Engine>>,
}

impl NewCaseCreator {
    pub fn new(engine: Rc<RefCell<Engine>>) -> Self {
        Self { engine }
    }
}

impl Agent for NewCaseCreator {
    fn handle(&mut self, env: &Envelope, out: &mut Outbox) {
        let Payload::Classification(rec) = &env.payload else {
            return fail(out, format!("case creator cannot handle {}", env.payload.kind()));
        };
        let mut rec = rec.as_ref().clone();
        let retained = self
            .engine
            .borrow_mut()
            .retain(&rec.context, &rec.context.task, &rec.solution);
        match retained {
            Ok(id) => {
                rec.retained = Some(id);
                out.send(AgentRole::TaskDecomposer, Payload::Notification(Box::new(rec.into())));
            }
            Err(e) => fail(out, e.to_string()),
        }
    }
}

/// Which application agents a goal class recruits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recruitment {
    /// Upper bound on IR enrichment requests; `None` means one per cloud point.
    pub max_enrichments: Option<usize>,
}

/// Splits a notification into GIS, IR and Device subtasks.
pub struct TaskDecomposer {
    table: BTreeMap<GoalClass, Recruitment>,
}

impl TaskDecomposer {
    pub fn new(table: BTreeMap<GoalClass, Recruitment>) -> Self {
        Self { table }
    }

    pub fn default_table() -> BTreeMap<GoalClass, Recruitment> {
        let all = Recruitment { max_enrichments: None };
        BTreeMap::from([
            (GoalClass::ExploreArea, all),
            (GoalClass::FollowTrack, all),
            (GoalClass::ReachPoi, all),
            (
                GoalClass::FindNearest,
                Recruitment {
                    max_enrichments: Some(1),
                },
            ),
        ])
    }
}

impl Default for TaskDecomposer {
    fn default() -> Self {
        Self::new(Self::default_table())
    }
}

impl Agent for TaskDecomposer {
    fn handle(&mut self, env: &Envelope, out: &mut Outbox) {
        let Payload::Notification(n) = &env.payload else {
            return fail(out, format!("task decomposer cannot handle {}", env.payload.kind()));
        };
        let n: &Notification = n;
        let Some(rule) = self.table.get(&n.goal) else {
            return fail(out, format!("no recruitment rule for {}", n.goal));
        };
        out.send(AgentRole::GisAgent, Payload::SubtaskRequest(Subtask::Spatial(n.scope.clone())));
        let ids = n.solution.cloud.ids();
        let take = rule.max_enrichments.unwrap_or(ids.len()).min(ids.len());
        for id in &ids[..take] {
            out.send(
                AgentRole::IrAgent,
                Payload::SubtaskRequest(Subtask::Enrich {
                    poi_id: id.to_string(),
                }),
            );
        }
        out.send(
            AgentRole::DeviceAgent,
            Payload::SubtaskRequest(Subtask::Present {
                solution: n.solution.clone(),
                device: n.context.device,
                expected: 1 + take,
            }),
        );
    }
}

/// Spatial queries against the POI store.
pub struct GisAgent {
    store: Arc<PoiStore>,
}

impl GisAgent {
    pub fn new(store: Arc<PoiStore>) -> Self {
        Self { store }
    }
}

impl Agent for GisAgent {
    fn handle(&mut self, env: &Envelope, out: &mut Outbox) {
        let result = match &env.payload {
            Payload::SubtaskRequest(Subtask::Spatial(q)) => match q.run(&self.store) {
                Ok(hits) => SubtaskResult::Spatial(hits.into_iter().map(|(p, d)| (p.id().to_owned(), d)).collect()),
                Err(e) => SubtaskResult::Failed(e.to_string()),
            },
            other => SubtaskResult::Failed(format!("gis agent cannot handle {}", other.kind())),
        };
        out.send(AgentRole::DeviceAgent, Payload::SubtaskResult(result));
    }
}

/// Reads `<repository>/<poi id>.txt`.
pub struct IrAgent {
    repository: Option<PathBuf>,
}

impl IrAgent {
    pub fn new(repository: Option<PathBuf>) -> Self {
        Self { repository }
    }

    fn lookup(&self, poi_id: &str) -> Result<String, String> {
        let repo = self.repository.as_ref().ok_or("no repository configured")?;
        if poi_id.starts_with('.') || poi_id.contains(['/', '\\']) {
            return Err("id is not a plain file name".into());
        }
        std::fs::read_to_string(repo.join(format!("{poi_id}.txt"))).map_err(|_| "no description".to_owned())
    }
}

impl Agent for IrAgent {
    fn handle(&mut self, env: &Envelope, out: &mut Outbox) {
        let result = match &env.payload {
            Payload::SubtaskRequest(Subtask::Enrich { poi_id }) => match self.lookup(poi_id) {
                Ok(text) => SubtaskResult::Enrichment {
                    poi_id: poi_id.clone(),
                    text,
                    warning: None,
                },
                Err(w) => SubtaskResult::Enrichment {
                    poi_id: poi_id.clone(),
                    text: String::new(),
                    warning: Some(w),
                },
            },
            other => SubtaskResult::Failed(format!("ir agent cannot handle {}", other.kind())),
        };
        out.send(AgentRole::DeviceAgent, Payload::SubtaskResult(result));
    }
}

#[derive(Default)]
struct Pending {
    request: Option<Subtask>,
    results: Vec<SubtaskResult>,
}

/// Collects subtask results per request chain and renders once all have
/// arrived. Presentations addressed to it are terminal.
#[derive(Default)]
pub struct DeviceAgent {
    pending: BTreeMap<u64, Pending>,
}

impl DeviceAgent {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Agent for DeviceAgent {
    fn handle(&mut self, env: &Envelope, out: &mut Outbox) {
        let entry = match &env.payload {
            Payload::Presentation(_) => return,
            Payload::SubtaskRequest(req @ Subtask::Present { .. }) => {
                let p = self.pending.entry(env.origin).or_default();
                p.request = Some(req.clone());
                p
            }
            Payload::SubtaskResult(r) => {
                let p = self.pending.entry(env.origin).or_default();
                p.results.push(r.clone());
                p
            }
            other => return fail(out, format!("device agent cannot handle {}", other.kind())),
        };
        if let Some(Subtask::Present {
            solution,
            device,
            expected,
        }) = &entry.request
        {
            if entry.results.len() >= *expected {
                let presentation = render(solution, &entry.results, *device);
                self.pending.remove(&env.origin);
                out.send(AgentRole::DeviceAgent, Payload::Presentation(presentation));
            }
        }
    }
}

/// A bus with all seven agents wired to one engine.
pub fn standard_bus(engine: Rc<RefCell<Engine>>, repository: Option<PathBuf>) -> Bus {
    let (template, store, budget) = {
        let e = engine.borrow();
        (e.template().clone(), Arc::clone(e.store()), e.config().hop_budget)
    };
    let mut bus = Bus::new(budget);
    bus.register(AgentRole::ContextAgent, Box::new(ContextAgent::new(template)));
    bus.register(AgentRole::CbrAgent, Box::new(CbrAgent::new(Rc::clone(&engine))));
    bus.register(AgentRole::NewCaseCreator, Box::new(NewCaseCreator::new(engine)));
    bus.register(AgentRole::TaskDecomposer, Box::new(TaskDecomposer::default()));
    bus.register(AgentRole::DeviceAgent, Box::new(DeviceAgent::new()));
    bus.register(AgentRole::GisAgent, Box::new(GisAgent::new(store)));
    bus.register(AgentRole::IrAgent, Box::new(IrAgent::new(repository)));
    bus
}
