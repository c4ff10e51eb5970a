//! The multidimensional context space: ten facets describing one moment of
//! a user's situation, templates that validate raw observations, per-facet
//! similarity and change detection.

mod change;
mod raw;
pub(crate) mod similarity;
mod template;

pub use change::{detect_context_change, ChangeError, ChangePolicy};
pub use raw::{FieldKind, RawContext, FIELDS};
pub use similarity::{
    aggregate_similarity, facet_similarity, interest_similarity, jaccard, ordinal_similarity,
    position_similarity, time_of_day_similarity, FacetId, FacetWeights, SimilarityParams,
    WeightsError,
};
pub use template::{
    validate_instance, ContextTemplate, FieldRule, FieldViolation, TemplateError, ValidationErrors,
    Violation,
};

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::geo::GeoPoint;
use crate::learning::{InterestVector, SubjectAxis};

macro_rules! named_enum {
    ($(#[$doc:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} {other:?}",
                        stringify!($name)
                    )),
                }
            }
        }
    };
}
pub(crate) use named_enum;

named_enum!(LearningStyle {
    Activist => "activist",
    Reflective => "reflective",
    Theorist => "theorist",
    Pragmatic => "pragmatic",
});

named_enum!(
    /// Ordinal; see [`Motivation::rank`].
    Motivation {
        Low => "low",
        Medium => "medium",
        High => "high",
    }
);

impl Motivation {
    pub fn rank(self) -> u8 {
        match self {
            Motivation::Low => 0,
            Motivation::Medium => 1,
            Motivation::High => 2,
        }
    }
}

named_enum!(Stimulus {
    Visual => "visual",
    Auditory => "auditory",
    Kinaesthetic => "kinaesthetic",
});

named_enum!(OperatingMode {
    Static => "static",
    Dynamic => "dynamic",
});

named_enum!(GoalClass {
    ExploreArea => "explore_area",
    FollowTrack => "follow_track",
    ReachPoi => "reach_poi",
    FindNearest => "find_nearest",
});

named_enum!(DeviceKind {
    MobilePhone => "mobile_phone",
    Gipix => "gipix",
    Pda => "pda",
    Laptop => "laptop",
    Desktop => "desktop",
});

named_enum!(Modality {
    Textual => "textual",
    Graphical => "graphical",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalFacet {
    pub interests: InterestVector,
    pub learning_style: LearningStyle,
    pub motivation: Motivation,
    pub preferred_stimuli: Stimulus,
    pub limitation_tags: BTreeSet<String>,
}

/// Parameters of a goal. Which ones are required depends on the goal class.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GoalParams {
    pub radius_m: Option<f64>,
    pub start_offset_m: Option<f64>,
    pub length_m: Option<f64>,
    pub corridor_m: Option<f64>,
    pub category: Option<String>,
    pub topic: Option<SubjectAxis>,
}

impl GoalParams {
    /// Names of the parameters `goal` requires but `self` lacks.
    pub fn missing_for(&self, goal: GoalClass) -> Vec<&'static str> {
        let need: &[(&str, bool)] = match goal {
            GoalClass::ExploreArea => &[("task.radius", self.radius_m.is_some())],
            GoalClass::FollowTrack => &[
                ("task.start_offset", self.start_offset_m.is_some()),
                ("task.length", self.length_m.is_some()),
                ("task.corridor", self.corridor_m.is_some()),
            ],
            GoalClass::FindNearest => &[("task.category", self.category.is_some())],
            GoalClass::ReachPoi => &[],
        };
        need.iter().filter(|(_, ok)| !ok).map(|(k, _)| *k).collect()
    }
}

impl fmt::Display for GoalParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let nums = [
            ("radius", self.radius_m),
            ("start", self.start_offset_m),
            ("length", self.length_m),
            ("corridor", self.corridor_m),
        ];
        for (k, v) in nums {
            if let Some(v) = v {
                parts.push(format!("{k}={v}"));
            }
        }
        if let Some(c) = &self.category {
            parts.push(format!("category={c}"));
        }
        if let Some(t) = self.topic {
            parts.push(format!("topic={t}"));
        }
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFacet {
    pub operating_mode: OperatingMode,
    pub goal_class: GoalClass,
    pub goal_params: GoalParams,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SocialFacet {
    pub companions: u32,
    pub companion_kinds: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatioTemporalFacet {
    pub timestamp: DateTime<Utc>,
    pub position: GeoPoint,
    pub heading_deg: Option<f64>,
    pub speed_mps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentalFacet {
    pub weather: String,
    pub indoor: bool,
    pub crowded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfrastructureFacet {
    pub network: bool,
    pub battery: f64,
}

/// One point of the context space. Every facet is present; optional parts
/// carry explicit empty values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSnapshot {
    pub personal: PersonalFacet,
    pub task: TaskFacet,
    pub device: DeviceKind,
    pub social: SocialFacet,
    pub spatio_temporal: SpatioTemporalFacet,
    pub environmental: EnvironmentalFacet,
    pub user_interface: Modality,
    pub infrastructure: InfrastructureFacet,
    pub strategic: Option<String>,
    pub historical: BTreeSet<String>,
}

impl ContextSnapshot {
    pub fn position(&self) -> GeoPoint {
        self.spatio_temporal.position
    }

    pub fn timestamp(&self) -> DateTime<Utc> {
        self.spatio_temporal.timestamp
    }
}
