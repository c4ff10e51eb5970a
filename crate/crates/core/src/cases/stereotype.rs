use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::CaseError;
use crate::context::{FacetWeights, Motivation, PersonalFacet, TaskFacet};
use crate::learning::{InterestVector, SubjectAxis};
use crate::text::content_lines;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Eq,
    Ne,
    Ge,
    Gt,
    Le,
    Lt,
    Contains,
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Eq => "eq",
            Comparator::Ne => "ne",
            Comparator::Ge => "ge",
            Comparator::Gt => "gt",
            Comparator::Le => "le",
            Comparator::Lt => "lt",
            Comparator::Contains => "contains",
        })
    }
}

/// `field op value`. Fields:
/// `personal.interests.{h,g,ns,c}` and `personal.motivation` (numeric or
/// ordinal), `personal.learning_style`, `personal.preferred_stimuli`,
/// `task.operating_mode`, `task.goal_class`, `task.category`, `task.topic`
/// (text, eq/ne), `personal.limitations` (set, contains).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trigger {
    pub field: String,
    pub op: Comparator,
    pub value: String,
}

enum Value {
    Num(f64),
    Text(Option<String>),
    Set(BTreeSet<String>),
}

fn lookup(field: &str, p: &PersonalFacet, t: &TaskFacet) -> Option<Value> {
    if let Some(code) = field.strip_prefix("personal.interests.") {
        let axis: SubjectAxis = code.parse().ok()?;
        return Some(Value::Num(p.interests.get(axis)));
    }
    Some(match field {
        "personal.motivation" => Value::Num(f64::from(p.motivation.rank())),
        "personal.learning_style" => Value::Text(Some(p.learning_style.to_string())),
        "personal.preferred_stimuli" => Value::Text(Some(p.preferred_stimuli.to_string())),
        "personal.limitations" => Value::Set(p.limitation_tags.clone()),
        "task.operating_mode" => Value::Text(Some(t.operating_mode.to_string())),
        "task.goal_class" => Value::Text(Some(t.goal_class.to_string())),
        "task.category" => Value::Text(t.goal_params.category.clone()),
        "task.topic" => Value::Text(t.goal_params.topic.map(|a| a.to_string())),
        _ => return None,
    })
}

impl Trigger {
    fn number(&self) -> Result<f64, String> {
        if self.field == "personal.motivation" {
            if let Ok(m) = self.value.parse::<Motivation>() {
                return Ok(f64::from(m.rank()));
            }
        }
        crate::text::parse_f64(&self.value)
    }

    /// Rejects unknown fields, comparators that do not fit the field and
    /// unparsable numeric operands.
    pub fn check(&self) -> Result<(), String> {
        let probe = lookup(&self.field, &dummy_personal(), &dummy_task())
            .ok_or_else(|| format!("unknown trigger field {:?}", self.field))?;
        use Comparator::*;
        let ok = match probe {
            Value::Num(_) => {
                self.number()?;
                self.op != Contains
            }
            Value::Text(_) => matches!(self.op, Eq | Ne),
            Value::Set(_) => self.op == Contains,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("comparator {} does not apply to {}", self.op, self.field))
        }
    }

    pub fn holds(&self, p: &PersonalFacet, t: &TaskFacet) -> bool {
        match lookup(&self.field, p, t) {
            Some(Value::Num(x)) => {
                let Ok(v) = self.number() else { return false };
                match self.op {
                    Comparator::Eq => x == v,
                    Comparator::Ne => x != v,
                    Comparator::Ge => x >= v,
                    Comparator::Gt => x > v,
                    Comparator::Le => x <= v,
                    Comparator::Lt => x < v,
                    Comparator::Contains => false,
                }
            }
            Some(Value::Text(x)) => match self.op {
                Comparator::Eq => x.as_deref() == Some(self.value.as_str()),
                Comparator::Ne => x.as_deref() != Some(self.value.as_str()),
                _ => false,
            },
            Some(Value::Set(s)) => self.op == Comparator::Contains && s.contains(&self.value),
            None => false,
        }
    }
}

fn dummy_personal() -> PersonalFacet {
    PersonalFacet {
        interests: InterestVector::default(),
        learning_style: crate::context::LearningStyle::Reflective,
        motivation: Motivation::Medium,
        preferred_stimuli: crate::context::Stimulus::Visual,
        limitation_tags: BTreeSet::new(),
    }
}

fn dummy_task() -> TaskFacet {
    TaskFacet {
        operating_mode: crate::context::OperatingMode::Static,
        goal_class: crate::context::GoalClass::ExploreArea,
        goal_params: Default::default(),
    }
}

/// Named user model seed: when every trigger holds, the defaults apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stereotype {
    pub name: String,
    pub triggers: Vec<Trigger>,
    pub default_interests: InterestVector,
    pub default_weights: FacetWeights,
}

impl Stereotype {
    pub fn check(&self) -> Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("stereotype without a name".into());
        }
        if self.triggers.is_empty() {
            return Err(format!("stereotype {:?} has no triggers", self.name));
        }
        for t in &self.triggers {
            t.check().map_err(|e| format!("stereotype {:?}: {e}", self.name))?;
        }
        Ok(())
    }

    pub fn matches(&self, p: &PersonalFacet, t: &TaskFacet) -> bool {
        self.triggers.iter().all(|tr| tr.holds(p, t))
    }
}

/// Stereotypes whose triggers all hold, in catalog order.
pub fn match_stereotypes<'a>(catalog: &'a [Stereotype], p: &PersonalFacet, t: &TaskFacet) -> Vec<&'a Stereotype> {
    catalog.iter().filter(|s| s.matches(p, t)).collect()
}

/// One JSON object per line; blank and `#` lines are skipped. Names must be
/// unique.
pub fn parse_stereotypes(text: &str) -> Result<Vec<Stereotype>, CaseError> {
    let mut out: Vec<Stereotype> = Vec::new();
    for (line, content) in content_lines(text) {
        let fail = |reason: String| CaseError::Line { line, reason };
        let s: Stereotype = serde_json::from_str(content).map_err(|e| fail(e.to_string()))?;
        s.check().map_err(fail)?;
        if out.iter().any(|o| o.name == s.name) {
            return Err(fail(format!("duplicate stereotype {:?}", s.name)));
        }
        out.push(s);
    }
    Ok(out)
}

/// Inverse of [`parse_stereotypes`].
pub fn format_stereotypes(catalog: &[Stereotype]) -> String {
    catalog
        .iter()
        .map(|s| serde_json::to_string(s).expect("stereotypes serialize") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trig(field: &str, op: Comparator, value: &str) -> Trigger {
        Trigger {
            field: field.into(),
            op,
            value: value.into(),
        }
    }

    fn stereo(name: &str, triggers: Vec<Trigger>) -> Stereotype {
        Stereotype {
            name: name.into(),
            triggers,
            default_interests: InterestVector::new([1.0, 0.0, 0.0, 0.0]).unwrap(),
            default_weights: FacetWeights::default(),
        }
    }

    fn personal(h: f64, motivation: Motivation) -> PersonalFacet {
        PersonalFacet {
            interests: InterestVector::new([h, 0.0, 0.0, 0.0]).unwrap(),
            motivation,
            limitation_tags: ["wheelchair".to_string()].into(),
            ..dummy_personal()
        }
    }

    #[test]
    fn history_buff() {
        let s = stereo("history-buff", vec![trig("personal.interests.h", Comparator::Ge, "0.7")]);
        s.check().unwrap();
        assert!(s.matches(&personal(0.9, Motivation::Low), &dummy_task()));
        assert!(!s.matches(&personal(0.5, Motivation::Low), &dummy_task()));
        assert!(match_stereotypes(&[], &personal(0.9, Motivation::Low), &dummy_task()).is_empty());
    }

    #[test]
    fn two_of_three_in_catalog_order() {
        let catalog = vec![
            stereo("keen", vec![trig("personal.motivation", Comparator::Ge, "high")]),
            stereo("access", vec![trig("personal.limitations", Comparator::Contains, "wheelchair")]),
            stereo(
                "explorer",
                vec![
                    trig("task.goal_class", Comparator::Eq, "explore_area"),
                    trig("personal.interests.h", Comparator::Lt, "0.5"),
                ],
            ),
        ];
        let p = personal(0.2, Motivation::Medium);
        let names: Vec<_> = match_stereotypes(&catalog, &p, &dummy_task()).iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["access", "explorer"]);
    }

    #[test]
    fn bad_triggers() {
        assert!(trig("personal.nope", Comparator::Eq, "x").check().is_err());
        assert!(trig("personal.limitations", Comparator::Ge, "x").check().is_err());
        assert!(trig("task.goal_class", Comparator::Gt, "x").check().is_err());
        assert!(trig("personal.interests.h", Comparator::Ge, "lots").check().is_err());
        assert!(stereo("empty", vec![]).check().is_err());
    }

    #[test]
    fn catalog_round_trip() {
        let catalog = vec![
            stereo("a", vec![trig("personal.interests.c", Comparator::Gt, "0.25")]),
            stereo("b", vec![trig("task.topic", Comparator::Eq, "h")]),
        ];
        let text = format_stereotypes(&catalog);
        assert_eq!(parse_stereotypes(&text).unwrap(), catalog);
        let dup = format!("{}{}", text, text.lines().next().unwrap());
        assert!(matches!(parse_stereotypes(&dup), Err(CaseError::Line { line: 3, .. })));
    }
}
