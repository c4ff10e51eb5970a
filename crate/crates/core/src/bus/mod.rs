//! A deterministic in-process message bus connecting the seven pipeline
//! agents. Every envelope gets a bus-wide sequence number and envelopes are
//! processed in ascending sequence order, so a run is a pure function of
//! its inputs and the trace can be diffed byte for byte.

mod agents;
mod plan;
mod render;

pub use agents::{
    standard_bus, CbrAgent, ContextAgent, DeviceAgent, GisAgent, IrAgent, NewCaseCreator, Recruitment,
    TaskDecomposer,
};
pub use plan::{AgentRole, PlanStep, StepAction, TaskPlan};
pub use render::{line_budget, render, EMPTY_SCOPE};

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use chrono::{DateTime, Utc};

use crate::cases::Solution;
use crate::context::{ContextSnapshot, DeviceKind, GoalClass, RawContext, TaskFacet};
use crate::engine::{Classification, Recommendation, Source};
use crate::geo::SpatialQuery;
use crate::text::format_instant;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BusError {
    #[error("no agent registered for {0}")]
    Unregistered(AgentRole),
    #[error("hop budget exceeded after {0} envelopes")]
    HopBudget(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sender {
    External,
    Agent(AgentRole),
}

impl fmt::Display for Sender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sender::External => f.write_str("external"),
            Sender::Agent(r) => write!(f, "{r}"),
        }
    }
}

/// What the CBR agent tells the task decomposer: the situation, its
/// context, the task and the goal, plus the solution chosen for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Notification {
    pub situation: Classification,
    pub context: ContextSnapshot,
    pub task_description: TaskFacet,
    pub goal: GoalClass,
    pub solution: Solution,
    pub source: Source,
    pub scope: SpatialQuery,
    pub retained: Option<String>,
}

impl From<Recommendation> for Notification {
    fn from(r: Recommendation) -> Self {
        Self {
            situation: r.classification,
            task_description: r.context.task.clone(),
            goal: r.context.task.goal_class,
            context: r.context,
            solution: r.solution,
            source: r.source,
            scope: r.scope,
            retained: r.retained,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Subtask {
    /// Resolve the spatial scope (GIS).
    Spatial(SpatialQuery),
    /// Fetch background material for one POI (IR).
    Enrich { poi_id: String },
    /// Render once `expected` results for this request chain have arrived.
    Present {
        solution: Solution,
        device: DeviceKind,
        expected: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubtaskResult {
    /// POI ids with distance or along-track offset, in query order.
    Spatial(Vec<(String, f64)>),
    Enrichment {
        poi_id: String,
        text: String,
        warning: Option<String>,
    },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    pub device: Option<DeviceKind>,
    pub lines: Vec<String>,
    pub error: bool,
}

impl Presentation {
    pub fn error(message: impl Into<String>) -> Self {
        Self {
            device: None,
            lines: vec![message.into()],
            error: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    RawContext(RawContext),
    ValidatedContext(Box<ContextSnapshot>),
    /// A situation that matched no case, with the fresh solution to retain.
    Classification(Box<Recommendation>),
    Notification(Box<Notification>),
    SubtaskRequest(Subtask),
    SubtaskResult(SubtaskResult),
    Presentation(Presentation),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::RawContext(_) => "raw_context",
            Payload::ValidatedContext(_) => "validated_context",
            Payload::Classification(_) => "classification",
            Payload::Notification(_) => "notification",
            Payload::SubtaskRequest(_) => "subtask_request",
            Payload::SubtaskResult(_) => "subtask_result",
            Payload::Presentation(_) => "presentation",
        }
    }

    /// One-line description for traces.
    pub fn summary(&self) -> String {
        match self {
            Payload::RawContext(r) => format!("{} fields", r.len()),
            Payload::ValidatedContext(c) => format!("{} at {}", c.task.goal_class, c.position()),
            Payload::Classification(r) => r.classification.to_string(),
            Payload::Notification(n) => format!(
                "{} {} [{}] cloud={}",
                n.goal,
                n.source,
                n.situation,
                n.solution.cloud.ids().join(",")
            ),
            Payload::SubtaskRequest(Subtask::Spatial(q)) => q.describe(),
            Payload::SubtaskRequest(Subtask::Enrich { poi_id }) => format!("enrich {poi_id}"),
            Payload::SubtaskRequest(Subtask::Present { device, expected, .. }) => {
                format!("present on {device} after {expected} results")
            }
            Payload::SubtaskResult(SubtaskResult::Spatial(hits)) => format!("{} hits", hits.len()),
            Payload::SubtaskResult(SubtaskResult::Enrichment { poi_id, text, warning }) => match warning {
                Some(w) => format!("{poi_id}: {w}"),
                None => format!("{poi_id}: {} bytes", text.len()),
            },
            Payload::SubtaskResult(SubtaskResult::Failed(reason)) => format!("failed: {reason}"),
            Payload::Presentation(p) if p.error => format!("error: {}", p.lines.join(" | ")),
            Payload::Presentation(p) => format!("{} lines", p.lines.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub seq: u64,
    pub sender: Sender,
    pub recipient: AgentRole,
    pub sim_time: DateTime<Utc>,
    /// Sequence number of the externally injected envelope this one
    /// descends from.
    pub origin: u64,
    pub payload: Payload,
}

/// One processed envelope as it appears in the replay log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub seq: u64,
    pub sim_time: DateTime<Utc>,
    pub sender: Sender,
    pub recipient: AgentRole,
    pub kind: &'static str,
    pub summary: String,
}

impl From<&Envelope> for TraceEntry {
    fn from(e: &Envelope) -> Self {
        Self {
            seq: e.seq,
            sim_time: e.sim_time,
            sender: e.sender,
            recipient: e.recipient,
            kind: e.payload.kind(),
            summary: e.payload.summary(),
        }
    }
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.seq,
            format_instant(&self.sim_time),
            self.sender,
            self.recipient,
            self.kind,
            self.summary.replace(['\t', '\n'], " ")
        )
    }
}

/// Messages an agent emits while handling one envelope.
#[derive(Debug, Default)]
pub struct Outbox {
    items: Vec<(AgentRole, Payload)>,
}

impl Outbox {
    pub fn send(&mut self, recipient: AgentRole, payload: Payload) {
        self.items.push((recipient, payload));
    }
}

pub trait Agent {
    fn handle(&mut self, envelope: &Envelope, out: &mut Outbox);
}

pub struct Bus {
    agents: BTreeMap<AgentRole, Box<dyn Agent>>,
    queues: BTreeMap<AgentRole, VecDeque<Envelope>>,
    next_seq: u64,
    hop_budget: usize,
    processed: Vec<Envelope>,
}

impl fmt::Debug for Bus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Bus")
            .field("agents", &self.agents.keys().collect::<Vec<_>>())
            .field("next_seq", &self.next_seq)
            .field("processed", &self.processed.len())
            .finish()
    }
}

pub const DEFAULT_HOP_BUDGET: usize = 10_000;

impl Bus {
    pub fn new(hop_budget: usize) -> Self {
        Self {
            agents: BTreeMap::new(),
            queues: BTreeMap::new(),
            next_seq: 1,
            hop_budget,
            processed: Vec::new(),
        }
    }

    /// Installs `agent` for `role`, replacing any earlier one.
    pub fn register(&mut self, role: AgentRole, agent: Box<dyn Agent>) {
        self.agents.insert(role, agent);
        self.queues.entry(role).or_default();
    }

    pub fn is_registered(&self, role: AgentRole) -> bool {
        self.agents.contains_key(&role)
    }

    fn enqueue(
        &mut self,
        sender: Sender,
        recipient: AgentRole,
        sim_time: DateTime<Utc>,
        origin: Option<u64>,
        payload: Payload,
    ) -> Result<u64, BusError> {
        let queue = self.queues.get_mut(&recipient).ok_or(BusError::Unregistered(recipient))?;
        let seq = self.next_seq;
        self.next_seq += 1;
        queue.push_back(Envelope {
            seq,
            sender,
            recipient,
            sim_time,
            origin: origin.unwrap_or(seq),
            payload,
        });
        Ok(seq)
    }

    /// Injects an external message. Returns its sequence number.
    pub fn dispatch(&mut self, recipient: AgentRole, sim_time: DateTime<Utc>, payload: Payload) -> Result<u64, BusError> {
        self.enqueue(Sender::External, recipient, sim_time, None, payload)
    }

    /// Handles envelopes in ascending sequence order until every queue is
    /// empty. Returns the trace of this run. Sends to unregistered roles
    /// and runs longer than the hop budget abort with an error; whatever
    /// was processed stays in [`Bus::processed`].
    pub fn run_until_idle(&mut self) -> Result<Vec<TraceEntry>, BusError> {
        let start = self.processed.len();
        let mut hops = 0usize;
        loop {
            let next = self
                .queues
                .iter()
                .filter_map(|(role, q)| q.front().map(|e| (e.seq, *role)))
                .min();
            let Some((_, role)) = next else { break };
            if hops >= self.hop_budget {
                return Err(BusError::HopBudget(self.hop_budget));
            }
            hops += 1;
            let env = self
                .queues
                .get_mut(&role)
                .and_then(VecDeque::pop_front)
                .expect("non-empty queue");
            let mut out = Outbox::default();
            self.agents
                .get_mut(&role)
                .expect("queues exist only for registered roles")
                .handle(&env, &mut out);
            let (time, origin) = (env.sim_time, env.origin);
            self.processed.push(env);
            for (to, payload) in out.items {
                self.enqueue(Sender::Agent(role), to, time, Some(origin), payload)?;
            }
        }
        Ok(self.processed[start..].iter().map(TraceEntry::from).collect())
    }

    /// Every envelope handled so far, in processing order.
    pub fn processed(&self) -> &[Envelope] {
        &self.processed
    }

    pub fn trace(&self) -> Vec<TraceEntry> {
        self.processed.iter().map(TraceEntry::from).collect()
    }
}

#[cfg(test)]
mod tests;
