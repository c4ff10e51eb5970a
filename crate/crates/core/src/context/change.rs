use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::ContextSnapshot;
use crate::geo::great_circle_distance;

/// When a new observation counts as a new situation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangePolicy {
    pub distance_m: f64,
    pub elapsed: Duration,
}

impl Default for ChangePolicy {
    fn default() -> Self {
        Self {
            distance_m: 100.0,
            elapsed: Duration::minutes(15),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("snapshots out of order: {next} precedes {prev}")]
pub struct ChangeError {
    pub prev: chrono::DateTime<chrono::Utc>,
    pub next: chrono::DateTime<chrono::Utc>,
}

/// True when the user moved at least `distance_m`, at least `elapsed` has
/// passed, or any categorical value changed.
pub fn detect_context_change(
    prev: &ContextSnapshot,
    next: &ContextSnapshot,
    policy: &ChangePolicy,
) -> Result<bool, ChangeError> {
    let (t0, t1) = (prev.timestamp(), next.timestamp());
    if t1 < t0 {
        return Err(ChangeError { prev: t0, next: t1 });
    }
    if great_circle_distance(&prev.position(), &next.position()) >= policy.distance_m {
        return Ok(true);
    }
    if t1 - t0 >= policy.elapsed {
        return Ok(true);
    }
    Ok(categorical_changed(prev, next))
}

fn categorical_changed(a: &ContextSnapshot, b: &ContextSnapshot) -> bool {
    let (p, q) = (&a.personal, &b.personal);
    p.learning_style != q.learning_style
        || p.motivation != q.motivation
        || p.preferred_stimuli != q.preferred_stimuli
        || p.limitation_tags != q.limitation_tags
        || a.task != b.task
        || a.device != b.device
        || a.social.companion_kinds != b.social.companion_kinds
        || a.environmental != b.environmental
        || a.user_interface != b.user_interface
        || a.infrastructure.network != b.infrastructure.network
        || a.strategic != b.strategic
}
