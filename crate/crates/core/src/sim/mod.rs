//! Scenario replay. A static scenario injects one observation; a dynamic
//! one walks a track and injects a fresh observation whenever consecutive
//! points differ enough to count as a new situation. Everything runs over
//! the standard bus on the scenario clock, so two runs with the same
//! inputs give identical logs and traces.

mod scenario;

pub use scenario::{Body, Scenario, ScenarioError};

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::bus::{standard_bus, AgentRole, Bus, BusError, Payload, TraceEntry};
use crate::context::{detect_context_change, named_enum, RawContext};
use crate::engine::{Daylight, Engine};
use crate::geo::{great_circle_distance, GeoPoint, Track};
use crate::text::format_instant;

named_enum!(
    LogKind {
        Request => "request",
        ContextChange => "context_change",
        Recommendation => "recommendation",
        Presentation => "presentation",
    }
);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub time: DateTime<Utc>,
    pub kind: LogKind,
    pub summary: String,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}",
            format_instant(&self.time),
            self.kind,
            self.summary.replace(['\t', '\n'], " ")
        )
    }
}

/// `sim_time<TAB>kind<TAB>summary`, one line per entry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub entries: Vec<LogEntry>,
}

impl EventLog {
    fn push(&mut self, time: DateTime<Utc>, kind: LogKind, summary: String) {
        self.entries.push(LogEntry { time, kind, summary });
    }

    pub fn count(&self, kind: LogKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }
}

impl fmt::Display for EventLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("dynamic scenario needs a track")]
    MissingTrack,
    #[error(transparent)]
    Bus(#[from] BusError),
}

#[derive(Debug)]
pub struct RunOutput {
    pub log: EventLog,
    pub trace: Vec<TraceEntry>,
    /// The engine after the run, holding any retained cases.
    pub engine: Engine,
}

struct Runner {
    bus: Bus,
    log: EventLog,
}

impl Runner {
    fn inject(&mut self, time: DateTime<Utc>, raw: RawContext) -> Result<(), BusError> {
        let origin = self.bus.dispatch(AgentRole::ContextAgent, time, Payload::RawContext(raw))?;
        self.bus.run_until_idle()?;
        for env in self.bus.processed().iter().filter(|e| e.origin == origin) {
            match &env.payload {
                Payload::Notification(n) => {
                    let mut s = format!(
                        "{} [{}] cloud={} steps={}",
                        n.source,
                        n.situation,
                        n.solution.cloud.ids().join(","),
                        n.solution.plan.steps.len()
                    );
                    if let Some(id) = &n.retained {
                        s.push_str(&format!(" retained={id}"));
                    }
                    self.log.push(time, LogKind::Recommendation, s);
                }
                Payload::Presentation(p) if env.recipient == AgentRole::DeviceAgent => {
                    let body = p.lines.join(" | ");
                    let s = if p.error { format!("error: {body}") } else { body };
                    self.log.push(time, LogKind::Presentation, s);
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn describe(raw: &RawContext, at: &GeoPoint) -> String {
    format!("{} at {at}", raw.get("task.goal_class").unwrap_or("?"))
}

/// Replays `scenario` against `engine`. Dynamic scenarios need the parsed
/// track; its timestamps are the scenario clock.
pub fn run(scenario: &Scenario, track: Option<&Track>, mut engine: Engine) -> Result<RunOutput, SimError> {
    engine.set_daylight(Some(Daylight {
        sunset: scenario.sunset,
        speed_mps: scenario.speed_mps,
    }));
    let track = match scenario.body {
        Body::Static { .. } => None,
        Body::Dynamic { .. } => Some(track.ok_or(SimError::MissingTrack)?),
    };
    engine.set_track(track.cloned());
    let policy = engine.config().change;
    let checker = engine.clone();
    let engine = Rc::new(RefCell::new(engine));
    let mut runner = Runner {
        bus: standard_bus(Rc::clone(&engine), scenario.repository.clone()),
        log: EventLog::default(),
    };

    match (&scenario.body, track) {
        (Body::Static { position }, _) => {
            let raw = scenario.observation(scenario.start, position);
            runner.log.push(scenario.start, LogKind::Request, describe(&raw, position));
            runner.inject(scenario.start, raw)?;
        }
        (Body::Dynamic { .. }, Some(track)) => {
            let mut prev: Option<(&crate::geo::TrackPoint, Option<crate::context::ContextSnapshot>)> = None;
            for point in track.points() {
                let raw = scenario.observation(point.time, &point.position);
                let snap = checker.validate(&raw).ok();
                let trigger = match &prev {
                    None => {
                        runner.log.push(point.time, LogKind::Request, describe(&raw, &point.position));
                        true
                    }
                    Some((p, psnap)) => {
                        // an observation that does not validate always goes through so
                        // the user sees the error
                        let changed = match (psnap, &snap) {
                            (Some(a), Some(b)) => detect_context_change(a, b, &policy).unwrap_or(true),
                            _ => true,
                        };
                        if changed {
                            let d = great_circle_distance(&p.position, &point.position);
                            let dt = (point.time - p.time).num_seconds();
                            runner
                                .log
                                .push(point.time, LogKind::ContextChange, format!("moved {d:.0} m in {dt} s"));
                        }
                        changed
                    }
                };
                if trigger {
                    runner.inject(point.time, raw)?;
                }
                prev = Some((point, snap));
            }
        }
        (Body::Dynamic { .. }, None) => unreachable!("checked above"),
    }

    let Runner { bus, log } = runner;
    let trace = bus.trace();
    drop(bus);
    let engine = Rc::try_unwrap(engine)
        .map(RefCell::into_inner)
        .unwrap_or_else(|rc| rc.borrow().clone());
    Ok(RunOutput { log, trace, engine })
}
