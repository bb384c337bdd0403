//! State estimation over the knowledge-layer dimensions, region
//! membership, the two-week depression screen and mood-regime detection.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod regime;
mod screen;
mod space;
mod state;

pub use regime::{composite_index, detect_regime, Phase, RegimePhase};
pub use screen::{screen_band, screen_depression, DepressionScreen, ScreenBand};
pub use space::{classify_regions, Region, StateSpace};
pub use state::{estimate_state, StateInputs, StateVector};

pub const VALENCE: &str = "emotional_valence";
pub const AROUSAL: &str = "emotional_arousal";
pub const STRESS: &str = "biological_stress";
pub const ACTIVITY: &str = "behavioral_activity";
pub const SOCIAL: &str = "social_engagement";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("no mood or physiological input for the window")]
    NoInputs,
    #[error("state dimension {0:?} is not part of the space")]
    DimensionMismatch(String),
    #[error("screen needs {need} days with data in the window, have {have}")]
    InsufficientData { have: usize, need: usize },
    #[error("regime detection needs at least {need} days, have {have}")]
    TooShort { have: usize, need: usize },
    #[error("invalid state space: {0}")]
    InvalidSpace(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub arousal_gain: f64,
    /// Communication minutes that count as fully engaged.
    pub social_comm_norm_min: f64,
    pub activity_percentile: f64,
    pub activity_history_days: usize,
    pub screen_window_days: usize,
    pub screen_min_days: usize,
    pub regime_min_days: usize,
    pub regime_ma_days: usize,
    pub regime_hysteresis: f64,
    pub regime_min_phase_days: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            arousal_gain: 0.15,
            social_comm_norm_min: 120.0,
            activity_percentile: 0.9,
            activity_history_days: 30,
            screen_window_days: 14,
            screen_min_days: 10,
            regime_min_days: 28,
            regime_ma_days: 7,
            regime_hysteresis: 0.25,
            regime_min_phase_days: 3,
        }
    }
}

/// One day of aggregated features, the unit of the screen and the regime detector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DailyFeatures {
    pub date: Option<NaiveDate>,
    pub mean_positive: Option<f64>,
    pub mean_negative: Option<f64>,
    pub sleep_score: Option<f64>,
    pub steps: Option<f64>,
    pub home_minutes: Option<f64>,
    pub rmssd: Option<f64>,
    pub lf_hf: Option<f64>,
    pub respiration: Option<f64>,
    pub communication_minutes: Option<f64>,
}

impl DailyFeatures {
    pub fn has_data(&self) -> bool {
        self.mean_negative.is_some()
            || self.sleep_score.is_some()
            || self.steps.is_some()
            || self.home_minutes.is_some()
    }
}
