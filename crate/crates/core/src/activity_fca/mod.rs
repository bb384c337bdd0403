//! Activity recognition with formal concept analysis.
//!
//! A cross table relates activities to experiential, temporal, spatial and
//! physiological attributes. Atomic intervals are described with the same
//! attributes and matched against the concept lattice; a few complex-event
//! rules then refine meals and food preparation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod lattice;
mod recognize;

pub use lattice::{
    build_lattice, enumerate_concepts, table2, AttributeKind, AttributeTag, ConceptLattice,
    CrossTable, FormalConcept, Side, MAX_SIDE,
};
pub use recognize::{
    classify_interval, describe_intervals, recognize_complex, recognize_day, Classification,
    ClassifiedInterval, DayRecognition, HrClass, Motion, Recognizer,
};

use crate::chronicle::ActivityLabel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FcaError {
    #[error("unknown table member {0:?}")]
    UnknownMember(String),
    #[error("table too large: {objects} objects x {attributes} attributes (limit 64 each)")]
    TableTooLarge { objects: usize, attributes: usize },
    #[error("relation matrix does not match the table dimensions")]
    Shape,
    #[error("duplicate object or attribute name")]
    Duplicate,
    #[error("concepts come from different tables")]
    MixedTables,
    #[error("cross table line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("cross table io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActivityConfig {
    pub granularity_min: u32,
    /// Accel magnitude std below which an interval is still, g.
    pub still_max_std: f64,
    pub walking_max_std: f64,
    pub short_max_min: f64,
    pub medium_max_min: f64,
    /// HR class offsets from the day's median interval HR, bpm.
    pub hr_low_delta: f64,
    pub hr_elevated_delta: f64,
    pub eating_hr_rise: f64,
    pub eating_window_min: i64,
    pub eating_duration_min: i64,
    pub prep_min_minutes: i64,
    pub prep_max_gap_min: i64,
    /// Cross table CSV replacing the shipped default.
    pub table_path: Option<String>,
}

impl Default for ActivityConfig {
    fn default() -> Self {
        ActivityConfig {
            granularity_min: 5,
            still_max_std: 0.05,
            walking_max_std: 0.3,
            short_max_min: 5.0,
            medium_max_min: 45.0,
            hr_low_delta: 5.0,
            hr_elevated_delta: 15.0,
            eating_hr_rise: 5.0,
            eating_window_min: 20,
            eating_duration_min: 30,
            prep_min_minutes: 5,
            prep_max_gap_min: 5,
            table_path: None,
        }
    }
}

impl ActivityConfig {
    pub fn load_table(&self) -> Result<CrossTable, FcaError> {
        match &self.table_path {
            None => Ok(default_table()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| FcaError::Io(e.to_string()))?;
                CrossTable::from_csv(&text)
            }
        }
    }
}

pub const ATTR_STILL: &str = "Still";
pub const ATTR_WALKING: &str = "Walking";
pub const ATTR_RUNNING: &str = "Running";
pub const ATTR_PHONE: &str = "Phone use";
pub const ATTR_SHORT: &str = "Short time-duration";
pub const ATTR_MEDIUM: &str = "Medium time-duration";
pub const ATTR_LONG: &str = "Long time-duration";
pub const ATTR_HR_LOW: &str = "Low HR";
pub const ATTR_HR_RESTING: &str = "Resting HR";
pub const ATTR_HR_ELEVATED: &str = "Elevated HR";

fn default_attributes() -> Vec<AttributeTag> {
    use AttributeKind::*;
    [
        (ATTR_STILL, Experiential),
        (ATTR_WALKING, Experiential),
        (ATTR_RUNNING, Experiential),
        (ATTR_PHONE, Experiential),
        (ATTR_SHORT, Temporal),
        (ATTR_MEDIUM, Temporal),
        (ATTR_LONG, Temporal),
        ("Morning", Temporal),
        ("Afternoon", Temporal),
        ("Evening", Temporal),
        ("Night", Temporal),
        ("Home", Spatial),
        ("Work", Spatial),
        ("Restaurant", Spatial),
        ("Transit", Spatial),
        ("Social venue", Spatial),
        ("Outdoor", Spatial),
        (ATTR_HR_LOW, Physiological),
        (ATTR_HR_RESTING, Physiological),
        (ATTR_HR_ELEVATED, Physiological),
    ]
    .into_iter()
    .map(|(n, k)| AttributeTag::new(n, k))
    .collect()
}

/// Shipped table over the 24 activities.
pub fn default_table() -> CrossTable {
    use ActivityLabel::*;
    let rows: &[(ActivityLabel, &[&str])] = &[
        (Still, &[ATTR_STILL]),
        (Walking, &[ATTR_WALKING]),
        (Running, &[ATTR_RUNNING]),
        (Cycling, &[ATTR_WALKING, "Outdoor", ATTR_HR_ELEVATED, ATTR_LONG]),
        (Driving, &[ATTR_STILL, "Transit"]),
        (DirectCommunication, &[ATTR_STILL, "Social venue", ATTR_SHORT]),
        (RemoteCommunication, &[ATTR_STILL, ATTR_PHONE, ATTR_HR_RESTING]),
        (OnTheSmartphone, &[ATTR_PHONE]),
        (Working, &[ATTR_STILL, "Work", ATTR_LONG]),
        (Commuting, &[ATTR_WALKING, "Transit", ATTR_MEDIUM]),
        (Exercising, &[ATTR_RUNNING, "Outdoor", ATTR_HR_ELEVATED]),
        (ReligiousEvent, &[ATTR_STILL, "Social venue", ATTR_MEDIUM, "Morning"]),
        (Shopping, &[ATTR_WALKING, "Social venue", ATTR_MEDIUM]),
        (Eating, &[ATTR_STILL, "Restaurant"]),
        (UsingToilet, &[ATTR_WALKING, "Work", ATTR_SHORT]),
        (HomeEvent, &["Home"]),
        (WatchingTv, &[ATTR_STILL, "Home", "Evening", ATTR_MEDIUM]),
        (PreparingFood, &[ATTR_WALKING, "Home"]),
        (Socializing, &[ATTR_STILL, "Social venue", ATTR_LONG]),
        (Housework, &[ATTR_WALKING, "Home", ATTR_LONG]),
        (IntimateRelations, &[ATTR_STILL, "Home", "Night", ATTR_HR_ELEVATED]),
        (Relaxing, &[ATTR_STILL, "Home", ATTR_LONG]),
        (TakingABreak, &[ATTR_STILL, "Work", ATTR_SHORT]),
        (Sleeping, &[ATTR_STILL, "Home", ATTR_LONG, ATTR_HR_LOW]),
    ];
    let attributes = default_attributes();
    let relation: Vec<Vec<bool>> = rows
        .iter()
        .map(|(_, attrs)| {
            attributes
                .iter()
                .map(|a| attrs.contains(&a.name.as_str()))
                .collect()
        })
        .collect();
    CrossTable::new(rows.iter().map(|r| r.0).collect(), attributes, &relation)
        .expect("default table is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_covers_taxonomy() {
        let t = default_table();
        assert_eq!(t.objects.len(), 24);
        assert!(!t.objects.contains(&ActivityLabel::Unknown));
        let c = enumerate_concepts(&t).unwrap();
        assert!(c.len() > 24);
        assert_eq!(CrossTable::from_csv(&t.to_csv()).unwrap(), t);
    }
}
