//! Stress score: logistic of the mean contributor z-score against the
//! person's own baseline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PhysioConfig, PhysioError};
use crate::personal_model::{Metric, PersonalBaseline};
use crate::stats::logistic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressLevel {
    Low,
    Medium,
    High,
}

impl StressLevel {
    pub fn from_score(score: f64, cfg: &PhysioConfig) -> Self {
        if score < cfg.stress_low_max {
            StressLevel::Low
        } else if score < cfg.stress_high_min {
            StressLevel::Medium
        } else {
            StressLevel::High
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StressInputs {
    pub rmssd: Option<f64>,
    pub lf_hf: Option<f64>,
    pub arousal_fraction: Option<f64>,
    pub respiration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressAssessment {
    pub score: f64,
    pub level: StressLevel,
    /// Signed so that positive always means more stress.
    pub contributors: BTreeMap<String, f64>,
    pub mean_z: f64,
}

const MIN_DAYS: u32 = 3;

pub fn stress_score(
    inputs: &StressInputs,
    baseline: &PersonalBaseline,
    cfg: &PhysioConfig,
) -> Result<StressAssessment, PhysioError> {
    let parts = [
        (Metric::Rmssd, inputs.rmssd, -1.0),
        (Metric::LfHf, inputs.lf_hf, 1.0),
        (Metric::ArousalFraction, inputs.arousal_fraction, 1.0),
        (Metric::Respiration, inputs.respiration, 1.0),
    ];
    let mut contributors = BTreeMap::new();
    for (metric, value, sign) in parts {
        let Some(v) = value else { continue };
        let days = baseline.days(metric);
        if days < MIN_DAYS {
            return Err(PhysioError::InsufficientBaseline {
                metric: metric.as_str().to_string(),
                days,
            });
        }
        let z = sign * baseline.z(metric, v);
        let name = if sign < 0.0 {
            format!("-{}", metric.as_str())
        } else {
            metric.as_str().to_string()
        };
        contributors.insert(name, z);
    }
    if contributors.is_empty() {
        return Err(PhysioError::InsufficientBaseline {
            metric: "any".into(),
            days: 0,
        });
    }
    let mean_z = contributors.values().sum::<f64>() / contributors.len() as f64;
    let score = logistic(mean_z);
    Ok(StressAssessment {
        score,
        level: StressLevel::from_score(score, cfg),
        contributors,
        mean_z,
    })
}
