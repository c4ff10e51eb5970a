use serde::{Deserialize, Serialize};

use super::{GeoError, GeoPoint};
use crate::learning::AxisMembership;

/// Categories that are useful without any learning value.
pub const SERVICE_CATEGORIES: [&str; 5] =
    ["gas_station", "drugstore", "hospital", "general_store", "restaurant"];

/// A point of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoiRecord")]
pub struct Poi {
    id: String,
    name: String,
    position: GeoPoint,
    membership: AxisMembership,
    visit_min: u32,
    category: String,
    description: String,
}

#[derive(Deserialize)]
struct PoiRecord {
    id: String,
    name: String,
    position: GeoPoint,
    membership: AxisMembership,
    visit_min: u32,
    category: String,
    description: String,
}

impl TryFrom<PoiRecord> for Poi {
    type Error = GeoError;

    fn try_from(r: PoiRecord) -> Result<Self, Self::Error> {
        Poi::new(r.id, r.name, r.position, r.membership, r.visit_min, r.category, r.description)
    }
}

impl Poi {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        position: GeoPoint,
        membership: AxisMembership,
        visit_min: u32,
        category: impl Into<String>,
        description: impl Into<String>,
    ) -> Result<Self, GeoError> {
        let poi = Self {
            id: id.into(),
            name: name.into(),
            position,
            membership,
            visit_min,
            category: category.into(),
            description: description.into(),
        };
        poi.check()?;
        Ok(poi)
    }

    fn check(&self) -> Result<(), GeoError> {
        if self.id.is_empty() || self.id.chars().any(char::is_whitespace) {
            return Err(GeoError::Poi(format!("bad id {:?}", self.id)));
        }
        if self.category.is_empty() || self.category.chars().any(char::is_whitespace) {
            return Err(GeoError::Poi(format!("bad category {:?}", self.category)));
        }
        for (field, text) in [("name", &self.name), ("description", &self.description)] {
            if text.contains(['\t', '\n', '\r']) {
                return Err(GeoError::Poi(format!("{field} contains a tab or line break")));
            }
        }
        if self.visit_min == 0 {
            return Err(GeoError::Poi("visit duration must be positive".into()));
        }
        if !self.membership.any_positive() && !self.is_service() {
            return Err(GeoError::Poi(format!(
                "{} has no subject membership and is not a service category",
                self.id
            )));
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn position(&self) -> GeoPoint {
        self.position
    }

    pub fn membership(&self) -> &AxisMembership {
        &self.membership
    }

    /// Expected visit duration in minutes.
    pub fn visit_min(&self) -> u32 {
        self.visit_min
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn is_service(&self) -> bool {
        SERVICE_CATEGORIES.contains(&self.category.as_str())
    }
}
