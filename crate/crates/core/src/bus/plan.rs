use std::fmt;

use serde::{Deserialize, Serialize};

use crate::context::named_enum;

named_enum!(
    /// The seven agents of the pipeline.
    AgentRole {
        ContextAgent => "context_agent",
        CbrAgent => "cbr_agent",
        NewCaseCreator => "new_case_creator",
        TaskDecomposer => "task_decomposer",
        DeviceAgent => "device_agent",
        GisAgent => "gis_agent",
        IrAgent => "ir_agent",
    }
);

named_enum!(StepAction {
    Route => "route",
    Inform => "inform",
    Visit => "visit",
    Notice => "notice",
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub agent: AgentRole,
    pub action: StepAction,
    pub target: Option<String>,
    pub instruction: String,
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.agent, self.instruction)
    }
}

/// Ordered tasks guiding the user to the recommended points.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaskPlan {
    pub steps: Vec<PlanStep>,
}

fn stage(agent: AgentRole) -> u8 {
    match agent {
        AgentRole::GisAgent => 0,
        AgentRole::IrAgent => 1,
        AgentRole::DeviceAgent => 2,
        _ => 3,
    }
}

impl TaskPlan {
    pub fn new(steps: Vec<PlanStep>) -> Self {
        Self { steps }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Distinct POI ids referenced by steps, first mention first.
    pub fn targets(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.steps {
            if let Some(t) = s.target.as_deref() {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        out
    }

    /// For every POI, GIS steps come before IR steps, which come before
    /// Device steps. Other roles may not own steps.
    pub fn is_staged(&self) -> bool {
        let mut last: std::collections::BTreeMap<Option<&str>, u8> = Default::default();
        for s in &self.steps {
            let st = stage(s.agent);
            if st > 2 {
                return false;
            }
            let prev = last.entry(s.target.as_deref()).or_insert(0);
            if st < *prev {
                return false;
            }
            *prev = st;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(agent: AgentRole, target: &str) -> PlanStep {
        PlanStep {
            agent,
            action: StepAction::Route,
            target: Some(target.to_owned()),
            instruction: String::new(),
        }
    }

    #[test]
    fn staging() {
        let ok = TaskPlan::new(vec![
            step(AgentRole::GisAgent, "a"),
            step(AgentRole::GisAgent, "b"),
            step(AgentRole::IrAgent, "a"),
            step(AgentRole::DeviceAgent, "a"),
            step(AgentRole::IrAgent, "b"),
        ]);
        assert!(ok.is_staged());
        assert_eq!(ok.targets(), ["a", "b"]);
        let bad = TaskPlan::new(vec![step(AgentRole::IrAgent, "a"), step(AgentRole::GisAgent, "a")]);
        assert!(!bad.is_staged());
        assert!(!TaskPlan::new(vec![step(AgentRole::CbrAgent, "a")]).is_staged());
    }

    #[test]
    fn role_names_round_trip() {
        for r in AgentRole::ALL {
            assert_eq!(r.as_str().parse::<AgentRole>().unwrap(), *r);
        }
    }
}
