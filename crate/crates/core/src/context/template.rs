//! Context templates and instance validation.
//!
//! Template file: one constraint per line, `<field> <kind> [<value>]`,
//! where kind is `required`, `default <value>`, `allowed <v1,v2,...>` or
//! `range <min>,<max>`. Field keys are those of [`FIELDS`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::raw::field_kind;
use super::*;
use crate::geo::GeoPoint;
use crate::learning::InterestVector;
use crate::text::{content_lines, parse_bool, parse_f64, parse_instant, split_list};

const NUMERIC_FIELDS: &[&str] = &[
    "personal.interests",
    "task.radius",
    "task.start_offset",
    "task.length",
    "task.corridor",
    "social.companions",
    "spatio_temporal.lat",
    "spatio_temporal.lon",
    "spatio_temporal.heading",
    "spatio_temporal.speed",
    "infrastructure.battery",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown field {0:?}")]
    UnknownField(String),
    #[error("{field}: {reason}")]
    Rule { field: String, reason: String },
    #[error("default for {field} fails its own constraints: {violation}")]
    SelfRejecting { field: String, violation: Violation },
}

/// Constraints a template places on one field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldRule {
    /// The raw context must supply the field; defaults are not used.
    pub required: bool,
    pub default: Option<String>,
    pub allowed: Option<BTreeSet<String>>,
    pub range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Missing,
    UnknownField,
    Malformed(String),
    OutOfRange(String),
    NotAllowed,
    RequiredByGoal(GoalClass),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Missing => f.write_str("missing"),
            Violation::UnknownField => f.write_str("unknown field"),
            Violation::Malformed(m) => f.write_str(m),
            Violation::OutOfRange(bounds) => write!(f, "out of {bounds}"),
            Violation::NotAllowed => f.write_str("not in allowed set"),
            Violation::RequiredByGoal(g) => write!(f, "required by goal_class {g}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldViolation {
    pub field: String,
    pub violation: Violation,
}

/// Every violated field of a rejected raw context, in field order.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ValidationErrors(pub Vec<FieldViolation>);

impl ValidationErrors {
    pub fn violations(&self) -> &[FieldViolation] {
        &self.0
    }

    pub fn get(&self, field: &str) -> Option<&Violation> {
        self.0.iter().find(|v| v.field == field).map(|v| &v.violation)
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{}: {}", v.field, v.violation)).collect();
        f.write_str(&parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContextTemplate {
    rules: BTreeMap<String, FieldRule>,
}

impl ContextTemplate {
    /// No constraints and no defaults beyond the built-in value checks.
    pub fn open() -> Self {
        Self::default()
    }

    /// Defaults for everything except the goal, the instant and the position.
    pub fn standard() -> Self {
        let defaults = [
            ("personal.interests", "0,0,0,0"),
            ("personal.learning_style", "reflective"),
            ("personal.motivation", "medium"),
            ("personal.preferred_stimuli", "visual"),
            ("task.operating_mode", "static"),
            ("device", "mobile_phone"),
            ("social.companions", "0"),
            ("environmental.weather", "unknown"),
            ("environmental.indoor", "false"),
            ("environmental.crowded", "false"),
            ("user_interface", "graphical"),
            ("infrastructure.network", "true"),
            ("infrastructure.battery", "1"),
        ];
        let mut t = Self::open();
        for (k, v) in defaults {
            t.rules.entry(k.to_owned()).or_default().default = Some(v.to_owned());
        }
        t
    }

    pub fn rules(&self) -> &BTreeMap<String, FieldRule> {
        &self.rules
    }

    pub fn rule(&self, field: &str) -> Option<&FieldRule> {
        self.rules.get(field)
    }

    fn rule_mut(&mut self, field: &str) -> Result<&mut FieldRule, TemplateError> {
        if field_kind(field).is_none() {
            return Err(TemplateError::UnknownField(field.to_owned()));
        }
        Ok(self.rules.entry(field.to_owned()).or_default())
    }

    pub fn with_default(mut self, field: &str, value: &str) -> Result<Self, TemplateError> {
        self.rule_mut(field)?.default = Some(value.trim().to_owned());
        self.check()?;
        Ok(self)
    }

    pub fn with_required(mut self, field: &str) -> Result<Self, TemplateError> {
        self.rule_mut(field)?.required = true;
        Ok(self)
    }

    pub fn with_allowed<'a>(
        mut self,
        field: &str,
        values: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self, TemplateError> {
        let set: BTreeSet<String> = values.into_iter().map(|v| v.trim().to_owned()).collect();
        if set.is_empty() {
            return Err(TemplateError::Rule {
                field: field.to_owned(),
                reason: "empty allowed set".into(),
            });
        }
        self.rule_mut(field)?.allowed = Some(set);
        self.check()?;
        Ok(self)
    }

    pub fn with_range(mut self, field: &str, min: f64, max: f64) -> Result<Self, TemplateError> {
        if !NUMERIC_FIELDS.contains(&field) && field_kind(field).is_some() {
            return Err(TemplateError::Rule {
                field: field.to_owned(),
                reason: "range applies to numeric fields only".into(),
            });
        }
        if !(min <= max) {
            return Err(TemplateError::Rule {
                field: field.to_owned(),
                reason: format!("empty range [{min}, {max}]"),
            });
        }
        self.rule_mut(field)?.range = Some((min, max));
        self.check()?;
        Ok(self)
    }

    /// Every default must satisfy the template's own constraints and parse
    /// as a value of its field, so the template accepts at least one
    /// instance.
    pub fn check(&self) -> Result<(), TemplateError> {
        for (field, rule) in &self.rules {
            if let Some(d) = &rule.default {
                let mut probe = Collector::default();
                probe.constrain(field, d, Some(rule));
                probe.typed_probe(field, d);
                if let Some(v) = probe.errors.into_iter().next() {
                    return Err(TemplateError::SelfRejecting {
                        field: field.clone(),
                        violation: v.violation,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let mut t = Self::open();
        for (line, content) in content_lines(text) {
            let syntax = |reason: &str| TemplateError::Syntax {
                line,
                reason: reason.to_owned(),
            };
            let content = content.trim();
            let (field, rest) = content
                .split_once(char::is_whitespace)
                .map(|(f, r)| (f, r.trim()))
                .unwrap_or((content, ""));
            let (kind, value) = rest
                .split_once(char::is_whitespace)
                .map(|(k, v)| (k, v.trim()))
                .unwrap_or((rest, ""));
            t = match kind {
                "required" if value.is_empty() => t.with_required(field)?,
                "default" => t.with_default(field, value)?,
                "allowed" => t.with_allowed(field, split_list(value))?,
                "range" => {
                    let (lo, hi) = value.split_once(',').ok_or_else(|| syntax("range needs min,max"))?;
                    let lo = parse_f64(lo).map_err(|e| syntax(&e))?;
                    let hi = parse_f64(hi).map_err(|e| syntax(&e))?;
                    t.with_range(field, lo, hi)?
                }
                "" => return Err(syntax("missing constraint kind")),
                other => return Err(syntax(&format!("unknown constraint kind {other:?}"))),
            };
        }
        Ok(t)
    }

    /// Canonical text form; [`ContextTemplate::parse`] reads it back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (field, rule) in &self.rules {
            if rule.required {
                out.push_str(&format!("{field} required\n"));
            }
            if let Some(d) = &rule.default {
                out.push_str(&format!("{field} default {d}\n"));
            }
            if let Some(a) = &rule.allowed {
                let items: Vec<&str> = a.iter().map(String::as_str).collect();
                out.push_str(&format!("{field} allowed {}\n", items.join(",")));
            }
            if let Some((lo, hi)) = rule.range {
                out.push_str(&format!("{field} range {lo},{hi}\n"));
            }
        }
        out
    }
}

#[derive(Default)]
struct Collector {
    errors: Vec<FieldViolation>,
}

impl Collector {
    fn push(&mut self, field: &str, violation: Violation) {
        self.errors.push(FieldViolation {
            field: field.to_owned(),
            violation,
        });
    }

    /// Template constraints on the textual value.
    fn constrain(&mut self, field: &str, value: &str, rule: Option<&FieldRule>) {
        let Some(rule) = rule else { return };
        let kind = field_kind(field).unwrap_or(FieldKind::Scalar);
        if let Some(allowed) = &rule.allowed {
            let ok = match kind {
                FieldKind::List => split_list(value).all(|item| allowed.contains(item)),
                _ => allowed.contains(value),
            };
            if !ok {
                self.push(field, Violation::NotAllowed);
            }
        }
        if let Some((lo, hi)) = rule.range {
            let parts: Vec<&str> = match kind {
                FieldKind::Axes => value.split(',').collect(),
                _ => vec![value],
            };
            for part in parts {
                // unparsable values are reported by the typed pass
                if let Ok(x) = parse_f64(part) {
                    if x < lo || x > hi {
                        self.push(field, Violation::OutOfRange(format!("[{lo},{hi}]")));
                        break;
                    }
                }
            }
        }
    }

    /// Runs the built-in check for one field's value in isolation.
    fn typed_probe(&mut self, field: &str, value: &str) {
        let mut values = BTreeMap::new();
        values.insert(field, value.to_owned());
        let mut f = Fields { values, c: self };
        match field {
            "personal.interests" => {
                f.axes(field);
            }
            "personal.learning_style" => {
                f.parsed::<LearningStyle>(field);
            }
            "personal.motivation" => {
                f.parsed::<Motivation>(field);
            }
            "personal.preferred_stimuli" => {
                f.parsed::<Stimulus>(field);
            }
            "task.operating_mode" => {
                f.parsed::<OperatingMode>(field);
            }
            "task.goal_class" => {
                f.parsed::<GoalClass>(field);
            }
            "task.topic" => {
                f.parsed::<crate::learning::SubjectAxis>(field);
            }
            "device" => {
                f.parsed::<DeviceKind>(field);
            }
            "user_interface" => {
                f.parsed::<Modality>(field);
            }
            "social.companions" => {
                f.count(field);
            }
            "spatio_temporal.timestamp" => {
                f.instant(field);
            }
            "environmental.indoor" | "environmental.crowded" | "infrastructure.network" => {
                {
                f.boolean(field);
            }
            }
            "spatio_temporal.lat" => {
                f.num(field, |x| (-90.0..=90.0).contains(&x), "[-90,90]");
            }
            "spatio_temporal.lon" => {
                f.num(field, |x| (-180.0..180.0).contains(&x), "[-180,180)");
            }
            "spatio_temporal.heading" => {
                f.num(field, |x| (0.0..360.0).contains(&x), "[0,360)");
            }
            "infrastructure.battery" => {
                f.num(field, |x| (0.0..=1.0).contains(&x), "[0,1]");
            }
            "spatio_temporal.speed" | "task.radius" | "task.start_offset" | "task.corridor" => {
                {
                f.num(field, |x| x >= 0.0, "[0,inf)");
            }
            }
            "task.length" => {
                f.num(field, |x| x > 0.0, "(0,inf)");
            }
            "task.category" => {
                f.token(field);
            }
            "personal.limitations" | "social.companion_kinds" | "historical" => {
                f.list(field);
            }
            _ => {
                f.text(field);
            }
        }
    }
}

/// Resolved textual values plus the error sink used while typing them.
struct Fields<'a, 'c> {
    values: BTreeMap<&'a str, String>,
    c: &'c mut Collector,
}

impl Fields<'_, '_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr<Err = String>>(&mut self, key: &str) -> Option<T> {
        let v = self.raw(key)?.to_owned();
        match v.parse::<T>() {
            Ok(t) => Some(t),
            Err(e) => {
                self.c.push(key, Violation::Malformed(e));
                None
            }
        }
    }

    fn num(&mut self, key: &str, ok: impl Fn(f64) -> bool, bounds: &str) -> Option<f64> {
        let v = self.raw(key)?.to_owned();
        match parse_f64(&v) {
            Ok(x) if ok(x) => Some(x),
            Ok(_) => {
                self.c.push(key, Violation::OutOfRange(bounds.to_owned()));
                None
            }
            Err(e) => {
                self.c.push(key, Violation::Malformed(e));
                None
            }
        }
    }

    fn count(&mut self, key: &str) -> Option<u32> {
        let v = self.raw(key)?.to_owned();
        match v.parse::<u32>() {
            Ok(n) => Some(n),
            Err(_) => {
                self.c.push(key, Violation::Malformed(format!("not a non-negative integer: {v:?}")));
                None
            }
        }
    }

    fn boolean(&mut self, key: &str) -> Option<bool> {
        let v = self.raw(key)?.to_owned();
        parse_bool(&v).map_err(|e| self.c.push(key, Violation::Malformed(e))).ok()
    }

    fn instant(&mut self, key: &str) -> Option<chrono::DateTime<chrono::Utc>> {
        let v = self.raw(key)?.to_owned();
        parse_instant(&v).map_err(|e| self.c.push(key, Violation::Malformed(e))).ok()
    }

    fn axes(&mut self, key: &str) -> Option<InterestVector> {
        let v = self.raw(key)?.to_owned();
        let parts: Vec<&str> = v.split(',').collect();
        if parts.len() != 4 {
            self.c.push(key, Violation::Malformed(format!("expected 4 comma-separated values, got {}", parts.len())));
            return None;
        }
        let mut out = [0.0; 4];
        for (slot, part) in out.iter_mut().zip(parts) {
            match parse_f64(part) {
                Ok(x) => *slot = x,
                Err(e) => {
                    self.c.push(key, Violation::Malformed(e));
                    return None;
                }
            }
        }
        InterestVector::new(out)
            .map_err(|_| self.c.push(key, Violation::OutOfRange("[0,1]".into())))
            .ok()
    }

    fn text(&mut self, key: &str) -> Option<String> {
        let v = self.raw(key)?.to_owned();
        if v.chars().any(char::is_control) {
            self.c.push(key, Violation::Malformed("contains control characters".into()));
            return None;
        }
        Some(v)
    }

    /// Non-empty text without whitespace or commas.
    fn token(&mut self, key: &str) -> Option<String> {
        let v = self.text(key)?;
        if v.is_empty() || v.contains(|c: char| c.is_whitespace() || c == ',') {
            self.c.push(key, Violation::Malformed(format!("not a single token: {v:?}")));
            return None;
        }
        Some(v)
    }

    fn list(&mut self, key: &str) -> Option<BTreeSet<String>> {
        let v = self.text(key)?;
        Some(split_list(&v).map(str::to_owned).collect())
    }
}

/// Checks a raw observation against a template, fills defaults for absent
/// fields and types every value. Never panics; every violated field is
/// reported.
pub fn validate_instance(template: &ContextTemplate, raw: &RawContext) -> Result<ContextSnapshot, ValidationErrors> {
    let mut c = Collector::default();
    for (key, _) in raw.iter() {
        if field_kind(key).is_none() {
            c.push(key, Violation::UnknownField);
        }
    }
    let mut values: BTreeMap<&str, String> = BTreeMap::new();
    for &(key, kind, optional) in FIELDS {
        let rule = template.rule(key);
        let supplied = raw
            .get(key)
            .map(str::trim)
            .filter(|v| kind == FieldKind::List || !v.is_empty())
            .map(str::to_owned);
        let value = match supplied {
            Some(v) => Some(v),
            None if rule.is_some_and(|r| r.required) => {
                c.push(key, Violation::Missing);
                continue;
            }
            None => rule.and_then(|r| r.default.clone()),
        };
        match value {
            Some(v) => {
                c.constrain(key, &v, rule);
                values.insert(key, v);
            }
            None if !optional => c.push(key, Violation::Missing),
            None => {}
        }
    }

    let mut f = Fields { values, c: &mut c };
    let interests = f.axes("personal.interests");
    let learning_style = f.parsed::<LearningStyle>("personal.learning_style");
    let motivation = f.parsed::<Motivation>("personal.motivation");
    let stimuli = f.parsed::<Stimulus>("personal.preferred_stimuli");
    let limitations = f.list("personal.limitations").unwrap_or_default();
    let mode = f.parsed::<OperatingMode>("task.operating_mode");
    let goal = f.parsed::<GoalClass>("task.goal_class");
    let params = GoalParams {
        radius_m: f.num("task.radius", |x| x >= 0.0, "[0,inf)"),
        start_offset_m: f.num("task.start_offset", |x| x >= 0.0, "[0,inf)"),
        length_m: f.num("task.length", |x| x > 0.0, "(0,inf)"),
        corridor_m: f.num("task.corridor", |x| x >= 0.0, "[0,inf)"),
        category: f.token("task.category"),
        topic: f.parsed("task.topic"),
    };
    let device = f.parsed::<DeviceKind>("device");
    let companions = f.count("social.companions");
    let companion_kinds = f.list("social.companion_kinds").unwrap_or_default();
    let timestamp = f.instant("spatio_temporal.timestamp");
    let lat = f.num("spatio_temporal.lat", |x| (-90.0..=90.0).contains(&x), "[-90,90]");
    let lon = f.num("spatio_temporal.lon", |x| (-180.0..180.0).contains(&x), "[-180,180)");
    let heading = f.num("spatio_temporal.heading", |x| (0.0..360.0).contains(&x), "[0,360)");
    let speed = f.num("spatio_temporal.speed", |x| x >= 0.0, "[0,inf)");
    let weather = f.text("environmental.weather");
    let indoor = f.boolean("environmental.indoor");
    let crowded = f.boolean("environmental.crowded");
    let ui = f.parsed::<Modality>("user_interface");
    let network = f.boolean("infrastructure.network");
    let battery = f.num("infrastructure.battery", |x| (0.0..=1.0).contains(&x), "[0,1]");
    let strategic = f.text("strategic");
    let historical = f.list("historical").unwrap_or_default();

    if let Some(g) = goal {
        for key in params.missing_for(g) {
            if !c.errors.iter().any(|e| e.field == key) {
                c.push(key, Violation::RequiredByGoal(g));
            }
        }
    }
    if !c.errors.is_empty() {
        let order = |field: &str| FIELDS.iter().position(|(k, _, _)| *k == field).unwrap_or(usize::MAX);
        c.errors.sort_by_key(|e| order(&e.field));
        return Err(ValidationErrors(c.errors));
    }

    let assembled = (|| {
        Some(ContextSnapshot {
            personal: PersonalFacet {
                interests: interests?,
                learning_style: learning_style?,
                motivation: motivation?,
                preferred_stimuli: stimuli?,
                limitation_tags: limitations,
            },
            task: TaskFacet {
                operating_mode: mode?,
                goal_class: goal?,
                goal_params: params,
            },
            device: device?,
            social: SocialFacet {
                companions: companions?,
                companion_kinds,
            },
            spatio_temporal: SpatioTemporalFacet {
                timestamp: timestamp?,
                position: GeoPoint::new(lat?, lon?).ok()?,
                heading_deg: heading,
                speed_mps: speed,
            },
            environmental: EnvironmentalFacet {
                weather: weather?,
                indoor: indoor?,
                crowded: crowded?,
            },
            user_interface: ui?,
            infrastructure: InfrastructureFacet {
                network: network?,
                battery: battery?,
            },
            strategic,
            historical,
        })
    })();
    assembled.ok_or_else(|| {
        ValidationErrors(vec![FieldViolation {
            field: "context".into(),
            violation: Violation::Malformed("incomplete snapshot".into()),
        }])
    })
}
