use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ContextSnapshot;
use crate::text::{content_lines, format_instant, split_kv};

/// How a raw field value is spelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// A single value.
    Scalar,
    /// Comma-separated items; may be empty.
    List,
    /// Exactly four comma-separated decimals (h, g, ns, c).
    Axes,
}

/// Every field a raw context may carry: key, spelling, and whether the field
/// may be absent without a template default.
pub const FIELDS: &[(&str, FieldKind, bool)] = &[
    ("personal.interests", FieldKind::Axes, false),
    ("personal.learning_style", FieldKind::Scalar, false),
    ("personal.motivation", FieldKind::Scalar, false),
    ("personal.preferred_stimuli", FieldKind::Scalar, false),
    ("personal.limitations", FieldKind::List, true),
    ("task.operating_mode", FieldKind::Scalar, false),
    ("task.goal_class", FieldKind::Scalar, false),
    ("task.radius", FieldKind::Scalar, true),
    ("task.start_offset", FieldKind::Scalar, true),
    ("task.length", FieldKind::Scalar, true),
    ("task.corridor", FieldKind::Scalar, true),
    ("task.category", FieldKind::Scalar, true),
    ("task.topic", FieldKind::Scalar, true),
    ("device", FieldKind::Scalar, false),
    ("social.companions", FieldKind::Scalar, false),
    ("social.companion_kinds", FieldKind::List, true),
    ("spatio_temporal.timestamp", FieldKind::Scalar, false),
    ("spatio_temporal.lat", FieldKind::Scalar, false),
    ("spatio_temporal.lon", FieldKind::Scalar, false),
    ("spatio_temporal.heading", FieldKind::Scalar, true),
    ("spatio_temporal.speed", FieldKind::Scalar, true),
    ("environmental.weather", FieldKind::Scalar, false),
    ("environmental.indoor", FieldKind::Scalar, false),
    ("environmental.crowded", FieldKind::Scalar, false),
    ("user_interface", FieldKind::Scalar, false),
    ("infrastructure.network", FieldKind::Scalar, false),
    ("infrastructure.battery", FieldKind::Scalar, false),
    ("strategic", FieldKind::Scalar, true),
    ("historical", FieldKind::List, true),
];

pub(crate) fn field_kind(key: &str) -> Option<FieldKind> {
    FIELDS.iter().find(|(k, _, _)| *k == key).map(|(_, kind, _)| *kind)
}

/// An unvalidated observation: field key to textual value, as delivered by
/// context widgets or read from a file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RawContext {
    fields: BTreeMap<String, String>,
}

impl RawContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.fields.insert(key.into(), value.into());
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.set(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.fields.remove(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Reads `key=value` lines; blank and `#` lines are skipped. A later
    /// duplicate key overrides an earlier one.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut raw = Self::new();
        for (line, content) in content_lines(text) {
            let (k, v) = split_kv(content).ok_or_else(|| format!("line {line}: expected key=value"))?;
            if k.is_empty() {
                return Err(format!("line {line}: empty key"));
            }
            raw.set(k, v);
        }
        Ok(raw)
    }
}

impl fmt::Display for RawContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.fields {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

fn join<'a>(items: impl IntoIterator<Item = &'a String>) -> String {
    items.into_iter().map(String::as_str).collect::<Vec<_>>().join(",")
}

impl From<&ContextSnapshot> for RawContext {
    /// Spells out every present value; absent optional values are omitted.
    fn from(s: &ContextSnapshot) -> Self {
        let mut r = RawContext::new();
        let p = &s.personal;
        r.set("personal.interests", p.interests.to_string());
        r.set("personal.learning_style", p.learning_style.as_str());
        r.set("personal.motivation", p.motivation.as_str());
        r.set("personal.preferred_stimuli", p.preferred_stimuli.as_str());
        if !p.limitation_tags.is_empty() {
            r.set("personal.limitations", join(&p.limitation_tags));
        }
        let t = &s.task;
        r.set("task.operating_mode", t.operating_mode.as_str());
        r.set("task.goal_class", t.goal_class.as_str());
        let g = &t.goal_params;
        for (k, v) in [
            ("task.radius", g.radius_m),
            ("task.start_offset", g.start_offset_m),
            ("task.length", g.length_m),
            ("task.corridor", g.corridor_m),
        ] {
            if let Some(v) = v {
                r.set(k, v.to_string());
            }
        }
        if let Some(c) = &g.category {
            r.set("task.category", c.clone());
        }
        if let Some(topic) = g.topic {
            r.set("task.topic", topic.code());
        }
        r.set("device", s.device.as_str());
        r.set("social.companions", s.social.companions.to_string());
        if !s.social.companion_kinds.is_empty() {
            r.set("social.companion_kinds", join(&s.social.companion_kinds));
        }
        let st = &s.spatio_temporal;
        r.set("spatio_temporal.timestamp", format_instant(&st.timestamp));
        r.set("spatio_temporal.lat", st.position.lat().to_string());
        r.set("spatio_temporal.lon", st.position.lon().to_string());
        if let Some(h) = st.heading_deg {
            r.set("spatio_temporal.heading", h.to_string());
        }
        if let Some(v) = st.speed_mps {
            r.set("spatio_temporal.speed", v.to_string());
        }
        r.set("environmental.weather", s.environmental.weather.clone());
        r.set("environmental.indoor", s.environmental.indoor.to_string());
        r.set("environmental.crowded", s.environmental.crowded.to_string());
        r.set("user_interface", s.user_interface.as_str());
        r.set("infrastructure.network", s.infrastructure.network.to_string());
        r.set("infrastructure.battery", s.infrastructure.battery.to_string());
        if let Some(tag) = &s.strategic {
            r.set("strategic", tag.clone());
        }
        if !s.historical.is_empty() {
            r.set("historical", join(&s.historical));
        }
        r
    }
}
