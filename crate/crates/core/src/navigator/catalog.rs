use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::NavError;
use crate::estimator::{ACTIVITY, AROUSAL, SOCIAL, STRESS, VALENCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Risk {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub id: String,
    pub name: String,
    /// Expected weekly change per dimension.
    pub effect: BTreeMap<String, f64>,
    pub cost: f64,
    pub risk: Risk,
    pub requires_provider: bool,
    #[serde(default)]
    pub tags: Vec<String>,
}

impl InterventionSpec {
    pub fn validate(&self) -> Result<(), NavError> {
        let bad = |reason: &str| NavError::InvalidIntervention { id: self.id.clone(), reason: reason.into() };
        if self.id.is_empty() {
            return Err(bad("empty id"));
        }
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(bad("cost must be positive"));
        }
        if self.effect.values().any(|d| !(-0.3..=0.3).contains(d)) {
            return Err(bad("effect deltas must lie in [-0.3, 0.3]"));
        }
        if self.risk == Risk::High && !self.requires_provider {
            return Err(bad("high-risk interventions require a provider"));
        }
        Ok(())
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }
}

fn spec(
    id: &str,
    name: &str,
    effect: &[(&str, f64)],
    cost: f64,
    risk: Risk,
    requires_provider: bool,
    tags: &[&str],
) -> InterventionSpec {
    InterventionSpec {
        id: id.into(),
        name: name.into(),
        effect: effect.iter().map(|(d, v)| (d.to_string(), *v)).collect(),
        cost,
        risk,
        requires_provider,
        tags: tags.iter().map(|t| t.to_string()).collect(),
    }
}

/// Expert-specified starter catalog. Effects are editable guesses, not learned.
pub fn default_catalog() -> Vec<InterventionSpec> {
    use Risk::*;
    vec![
        spec("social_skills_therapy", "Therapy focused on enhancing social skills",
            &[(SOCIAL, 0.15), (VALENCE, 0.05)], 3.0, Medium, true, &["isolation"]),
        spec("social_support_reengagement", "Reengagement with available social support",
            &[(SOCIAL, 0.1), (VALENCE, 0.1)], 2.0, Low, false, &["isolation"]),
        spec("mbsr", "Mindfulness-based Stress-reduction",
            &[(STRESS, -0.1), (AROUSAL, -0.1)], 2.0, Low, false, &["volatility"]),
        spec("pmr", "Progressive muscle relaxation",
            &[(STRESS, -0.1), (AROUSAL, -0.05)], 1.0, Low, false, &["volatility"]),
        spec("unified_protocol", "Unified protocol for emotional disorders",
            &[(VALENCE, 0.1), (STRESS, -0.05), (AROUSAL, -0.05)], 4.0, Medium, true, &["volatility"]),
        spec("dbt", "Dialectical Behavior Therapy",
            &[(AROUSAL, -0.15), (VALENCE, 0.1)], 5.0, High, true, &["volatility"]),
        spec("abft", "Attachment-based Family Therapy",
            &[(VALENCE, 0.1), (SOCIAL, 0.1)], 5.0, High, true, &["volatility"]),
        spec("physical_activity", "Physical activity",
            &[(ACTIVITY, 0.1), (VALENCE, 0.05), (STRESS, -0.05)], 1.0, Low, false, &["maintenance"]),
        spec("social_interaction", "Social interaction with friends",
            &[(SOCIAL, 0.1), (VALENCE, 0.05)], 1.0, Low, false, &["maintenance"]),
    ]
}

/// Parses and validates a JSON list of interventions.
pub fn load_catalog(text: &str) -> Result<Vec<InterventionSpec>, NavError> {
    let list: Vec<InterventionSpec> = serde_json::from_str(text).map_err(|e| NavError::Catalog(e.to_string()))?;
    let mut ids = BTreeSet::new();
    for s in &list {
        s.validate()?;
        if !ids.insert(s.id.clone()) {
            return Err(NavError::Catalog(format!("duplicate id {:?}", s.id)));
        }
    }
    Ok(list)
}
