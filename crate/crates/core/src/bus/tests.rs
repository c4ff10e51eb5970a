use std::cell::RefCell;
use std::rc::Rc;
use std::sync::Arc;

use chrono::TimeZone;

use super::*;
use crate::engine::{Engine, EngineConfig};
use crate::geo::{GeoPoint, Poi, PoiStore};
use crate::learning::AxisMembership;

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2026, 6, 1, 10, 0, 0).unwrap()
}

fn store() -> Arc<PoiStore> {
    let poi = |id: &str, lat: f64, m: [f64; 4], cat: &str| {
        Poi::new(
            id,
            id,
            GeoPoint::new(lat, 26.0).unwrap(),
            AxisMembership::new(m).unwrap(),
            30,
            cat,
            "",
        )
        .unwrap()
    };
    Arc::new(
        PoiStore::from_pois([
            poi("a", 47.01, [1.0, 0.0, 0.0, 0.0], "monastery"),
            poi("b", 47.02, [0.8, 0.0, 0.0, 0.5], "monastery"),
            poi("c", 47.03, [0.5, 0.0, 0.0, 0.0], "museum"),
            poi("fuel", 47.005, [0.0; 4], "gas_station"),
        ])
        .unwrap(),
    )
}

fn raw(extra: &[(&str, &str)]) -> RawContext {
    let mut r = RawContext::new()
        .with("personal.interests", "1,0,0,0")
        .with("task.goal_class", "explore_area")
        .with("task.radius", "5000")
        .with("spatio_temporal.timestamp", "2026-06-01T10:00:00Z")
        .with("spatio_temporal.lat", "47")
        .with("spatio_temporal.lon", "26")
        .with("device", "desktop");
    for (k, v) in extra {
        r.set(*k, *v);
    }
    r
}

fn pipeline(repo: Option<std::path::PathBuf>) -> (Bus, Rc<RefCell<Engine>>) {
    let engine = Rc::new(RefCell::new(Engine::new(EngineConfig::default(), store())));
    (standard_bus(Rc::clone(&engine), repo), engine)
}

fn run(bus: &mut Bus, r: RawContext) -> Vec<TraceEntry> {
    bus.dispatch(AgentRole::ContextAgent, t0(), Payload::RawContext(r)).unwrap();
    bus.run_until_idle().unwrap()
}

fn route(trace: &[TraceEntry]) -> Vec<(AgentRole, &'static str)> {
    trace.iter().map(|e| (e.recipient, e.kind)).collect()
}

fn presentations(bus: &Bus) -> Vec<&Presentation> {
    bus.processed()
        .iter()
        .filter_map(|e| match &e.payload {
            Payload::Presentation(p) => Some(p),
            _ => None,
        })
        .collect()
}

struct Recorder(Rc<RefCell<Vec<u64>>>);

impl Agent for Recorder {
    fn handle(&mut self, env: &Envelope, _: &mut Outbox) {
        self.0.borrow_mut().push(env.seq);
    }
}

struct Echo;

impl Agent for Echo {
    fn handle(&mut self, env: &Envelope, out: &mut Outbox) {
        out.send(env.recipient, env.payload.clone());
    }
}

#[test]
fn empty_bus_and_unregistered() {
    let mut bus = Bus::new(10);
    assert!(bus.run_until_idle().unwrap().is_empty());
    let err = bus
        .dispatch(AgentRole::GisAgent, t0(), Payload::RawContext(RawContext::new()))
        .unwrap_err();
    assert_eq!(err, BusError::Unregistered(AgentRole::GisAgent));
}

#[test]
fn fifo_per_recipient() {
    let seen = Rc::new(RefCell::new(Vec::new()));
    let mut bus = Bus::new(10);
    bus.register(AgentRole::ContextAgent, Box::new(Recorder(Rc::clone(&seen))));
    bus.register(AgentRole::IrAgent, Box::new(Recorder(Rc::clone(&seen))));
    let a = bus.dispatch(AgentRole::ContextAgent, t0(), Payload::RawContext(RawContext::new())).unwrap();
    let b = bus.dispatch(AgentRole::IrAgent, t0(), Payload::RawContext(RawContext::new())).unwrap();
    let c = bus.dispatch(AgentRole::ContextAgent, t0(), Payload::RawContext(RawContext::new())).unwrap();
    bus.run_until_idle().unwrap();
    assert_eq!(*seen.borrow(), [a, b, c]);
}

#[test]
fn hop_budget_stops_cycles() {
    let mut bus = Bus::new(50);
    bus.register(AgentRole::GisAgent, Box::new(Echo));
    bus.dispatch(AgentRole::GisAgent, t0(), Payload::RawContext(RawContext::new())).unwrap();
    assert_eq!(bus.run_until_idle(), Err(BusError::HopBudget(50)));
    assert_eq!(bus.processed().len(), 50);
}

#[test]
fn canonical_pipeline_order() {
    let (mut bus, engine) = pipeline(None);
    let trace = run(&mut bus, raw(&[]));
    use AgentRole::*;
    assert_eq!(
        route(&trace),
        [
            (ContextAgent, "raw_context"),
            (CbrAgent, "validated_context"),
            (NewCaseCreator, "classification"),
            (TaskDecomposer, "notification"),
            (GisAgent, "subtask_request"),
            (IrAgent, "subtask_request"),
            (IrAgent, "subtask_request"),
            (IrAgent, "subtask_request"),
            (DeviceAgent, "subtask_request"),
            (DeviceAgent, "subtask_result"),
            (DeviceAgent, "subtask_result"),
            (DeviceAgent, "subtask_result"),
            (DeviceAgent, "subtask_result"),
            (DeviceAgent, "presentation"),
        ]
    );
    assert_eq!(engine.borrow().cases().len(), 1);
    let p = presentations(&bus);
    assert_eq!(p.len(), 1);
    assert!(p[0].lines[0].starts_with("1. a "));

    // the warm path skips the case creator
    let trace = run(&mut bus, raw(&[]));
    assert_eq!(route(&trace)[2], (TaskDecomposer, "notification"));
    assert_eq!(engine.borrow().cases().len(), 1);
    for w in bus.processed().windows(2) {
        assert!(w[0].seq < w[1].seq);
    }
}

#[test]
fn invalid_context_becomes_error_presentation() {
    let (mut bus, _) = pipeline(None);
    let trace = run(&mut bus, raw(&[("spatio_temporal.lat", "95")]));
    assert_eq!(
        route(&trace),
        [
            (AgentRole::ContextAgent, "raw_context"),
            (AgentRole::DeviceAgent, "presentation")
        ]
    );
    assert!(presentations(&bus)[0].error);
}

#[test]
fn engine_errors_become_error_presentations() {
    let (mut bus, _) = pipeline(None);
    run(&mut bus, raw(&[("personal.interests", "0,0,0,0")]));
    let p = presentations(&bus);
    assert_eq!(p.len(), 1);
    assert!(p[0].error);
    assert_eq!(p[0].lines, ["no interest signal"]);
}

#[test]
fn recruitment_counts() {
    let (mut bus, _) = pipeline(None);
    let count = |t: &[TraceEntry], r: AgentRole| t.iter().filter(|e| e.recipient == r && e.kind == "subtask_request").count();
    let t = run(
        &mut bus,
        raw(&[("task.goal_class", "find_nearest"), ("task.category", "monastery")]),
    );
    assert_eq!((count(&t, AgentRole::GisAgent), count(&t, AgentRole::IrAgent)), (1, 1));
    let t = run(&mut bus, raw(&[("task.radius", "100")]));
    assert_eq!((count(&t, AgentRole::GisAgent), count(&t, AgentRole::IrAgent)), (1, 0));
    assert_eq!(count(&t, AgentRole::DeviceAgent), 1);
    assert_eq!(presentations(&bus).last().unwrap().lines, [render::EMPTY_SCOPE]);
}

#[test]
fn missing_recruitment_rule() {
    let (mut bus, _) = pipeline(None);
    bus.register(AgentRole::TaskDecomposer, Box::new(TaskDecomposer::new(Default::default())));
    run(&mut bus, raw(&[]));
    let p = presentations(&bus);
    assert_eq!(p.len(), 1);
    assert_eq!(p[0].lines, ["no recruitment rule for explore_area"]);
}

#[test]
fn ir_reads_repository() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.txt"), "Frescoes.\n").unwrap();
    std::fs::write(dir.path().join("b.txt"), "Tower.\n").unwrap();
    let (mut bus, _) = pipeline(Some(dir.path().to_owned()));
    run(&mut bus, raw(&[]));
    let results: Vec<_> = bus
        .processed()
        .iter()
        .filter(|e| e.sender == Sender::Agent(AgentRole::IrAgent))
        .map(|e| e.payload.clone())
        .collect();
    assert_eq!(
        results,
        [
            Payload::SubtaskResult(SubtaskResult::Enrichment {
                poi_id: "a".into(),
                text: "Frescoes.\n".into(),
                warning: None
            }),
            Payload::SubtaskResult(SubtaskResult::Enrichment {
                poi_id: "b".into(),
                text: "Tower.\n".into(),
                warning: None
            }),
            Payload::SubtaskResult(SubtaskResult::Enrichment {
                poi_id: "c".into(),
                text: String::new(),
                warning: Some("no description".into())
            }),
        ]
    );
    let p = presentations(&bus);
    assert!(p[0].lines.contains(&"about a: Frescoes.".to_owned()));
}

#[test]
fn gis_matches_direct_query() {
    let s = store();
    let center = GeoPoint::new(47.0, 26.0).unwrap();
    let mut gis = GisAgent::new(Arc::clone(&s));
    let env = Envelope {
        seq: 1,
        sender: Sender::External,
        recipient: AgentRole::GisAgent,
        sim_time: t0(),
        origin: 1,
        payload: Payload::SubtaskRequest(Subtask::Spatial(crate::geo::SpatialQuery::Radius {
            center,
            radius_m: 2500.0,
        })),
    };
    let mut out = Outbox::default();
    gis.handle(&env, &mut out);
    let direct: Vec<(String, f64)> = s
        .pois_in_radius(&center, 2500.0)
        .unwrap()
        .into_iter()
        .map(|h| (h.poi.id().to_owned(), h.distance_m))
        .collect();
    assert_eq!(out.items, [(AgentRole::DeviceAgent, Payload::SubtaskResult(SubtaskResult::Spatial(direct)))]);
}

#[test]
fn replay_is_identical() {
    let lines = || {
        let (mut bus, _) = pipeline(None);
        run(&mut bus, raw(&[]));
        run(&mut bus, raw(&[("spatio_temporal.lat", "47.02")]));
        bus.trace().iter().map(ToString::to_string).collect::<Vec<_>>()
    };
    assert_eq!(lines(), lines());
}
