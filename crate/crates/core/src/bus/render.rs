use super::{Presentation, SubtaskResult};
use crate::cases::Solution;
use crate::context::DeviceKind;

pub const EMPTY_SCOPE: &str = "no learning points in scope";

/// Lines a device can show; `None` is unbounded.
pub fn line_budget(device: DeviceKind) -> Option<usize> {
    match device {
        DeviceKind::MobilePhone | DeviceKind::Gipix => Some(5),
        DeviceKind::Pda => Some(10),
        DeviceKind::Laptop | DeviceKind::Desktop => None,
    }
}

fn distance(m: f64) -> String {
    if m < 1000.0 {
        format!("{m:.0} m")
    } else {
        format!("{:.1} km", m / 1000.0)
    }
}

/// Text for one device. Ranked POI lines come first, plan steps fill what
/// is left of the line budget. Unbounded devices also get the background
/// text the IR agent found.
pub fn render(solution: &Solution, results: &[SubtaskResult], device: DeviceKind) -> Presentation {
    let mut lines = Vec::new();
    if solution.cloud.is_empty() {
        lines.push(EMPTY_SCOPE.to_owned());
    } else {
        for (rank, e) in solution.cloud.entries().iter().enumerate() {
            lines.push(format!(
                "{}. {} [{}] relevance {:.2}, {}",
                rank + 1,
                e.poi.name(),
                e.poi.category(),
                e.relevance,
                distance(e.offset_m)
            ));
        }
        for step in &solution.plan.steps {
            lines.push(format!("- {step}"));
        }
    }
    match line_budget(device) {
        Some(n) => lines.truncate(n),
        None => {
            for r in results {
                if let SubtaskResult::Enrichment { poi_id, text, warning: None } = r {
                    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
                    if !first.is_empty() {
                        lines.push(format!("about {poi_id}: {first}"));
                    }
                }
            }
        }
    }
    Presentation {
        device: Some(device),
        lines,
        error: false,
    }
}
