use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EstimatorConfig, EstimatorError, ACTIVITY, AROUSAL, SOCIAL, STRESS, VALENCE};
use crate::personal_model::{Metric, PersonalBaseline};
use crate::time::EpochMs;

/// A point in the state space. Dimensions without inputs are absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub timestamp: EpochMs,
    pub dims: BTreeMap<String, f64>,
    pub confidence: BTreeMap<String, f64>,
    /// Dimensions whose raw value fell outside [0, 1] before clamping.
    #[serde(default)]
    pub clamped: Vec<String>,
}

impl StateVector {
    pub fn new(timestamp: EpochMs) -> Self {
        StateVector { timestamp, ..Default::default() }
    }

    pub fn get(&self, dim: &str) -> Option<f64> {
        self.dims.get(dim).copied()
    }

    /// Sets a dimension, clamping into [0, 1] and recording when it had to.
    pub fn set(&mut self, dim: &str, raw: f64, confidence: f64) {
        let v = raw.clamp(0.0, 1.0);
        if v != raw {
            self.clamped.push(dim.to_string());
        }
        self.dims.insert(dim.to_string(), v);
        self.confidence.insert(dim.to_string(), confidence.clamp(0.0, 1.0));
    }

    pub fn with(mut self, dim: &str, v: f64) -> Self {
        self.set(dim, v, 1.0);
        self
    }
}

/// Window features feeding one state estimate. Coverage fields are the
/// fraction of expected inputs that were actually present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateInputs {
    pub timestamp: EpochMs,
    pub mean_positive: Option<f64>,
    pub mean_negative: Option<f64>,
    pub mood_coverage: f64,
    pub lf_hf: Option<f64>,
    pub stress_score: Option<f64>,
    pub physio_coverage: f64,
    pub steps: Option<f64>,
    /// Personal high-percentile daily steps over the recent history.
    pub steps_reference: Option<f64>,
    pub home_minutes: Option<f64>,
    pub communication_minutes: Option<f64>,
    pub behavior_coverage: f64,
}

impl StateInputs {
    pub fn empty(timestamp: EpochMs) -> Self {
        StateInputs {
            timestamp,
            mean_positive: None,
            mean_negative: None,
            mood_coverage: 1.0,
            lf_hf: None,
            stress_score: None,
            physio_coverage: 1.0,
            steps: None,
            steps_reference: None,
            home_minutes: None,
            communication_minutes: None,
            behavior_coverage: 1.0,
        }
    }
}

pub fn estimate_state(
    inputs: &StateInputs,
    baseline: &PersonalBaseline,
    cfg: &EstimatorConfig,
) -> Result<StateVector, EstimatorError> {
    let has_mood = inputs.mean_positive.is_some() && inputs.mean_negative.is_some();
    let has_physio = inputs.lf_hf.is_some() || inputs.stress_score.is_some();
    if !has_mood && !has_physio {
        return Err(EstimatorError::NoInputs);
    }
    let mut s = StateVector::new(inputs.timestamp);
    if let (Some(pa), Some(na)) = (inputs.mean_positive, inputs.mean_negative) {
        let v = if pa + na > 0.0 { pa / (pa + na) } else { 0.5 };
        s.set(VALENCE, v, inputs.mood_coverage);
    }
    if let Some(r) = inputs.lf_hf {
        let z = baseline.z(Metric::LfHf, r);
        s.set(AROUSAL, 0.5 + cfg.arousal_gain * z, inputs.physio_coverage);
    }
    if let Some(st) = inputs.stress_score {
        s.set(STRESS, st, inputs.physio_coverage);
    }
    if let (Some(steps), Some(reference)) = (inputs.steps, inputs.steps_reference) {
        if reference > 0.0 {
            s.set(ACTIVITY, steps / reference, inputs.behavior_coverage);
        }
    }
    if let Some(home) = inputs.home_minutes {
        let away = (1.0 - home / 1440.0).clamp(0.0, 1.0);
        let v = match inputs.communication_minutes {
            Some(c) => 0.5 * away + 0.5 * (c / cfg.social_comm_norm_min).clamp(0.0, 1.0),
            None => away,
        };
        s.set(SOCIAL, v, inputs.behavior_coverage);
    }
    Ok(s)
}
