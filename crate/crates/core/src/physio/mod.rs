//! Physiological markers: PPG beats and interbeat intervals, time and
//! frequency domain HRV, respiration rate, EDA state segmentation and a
//! personalized stress score.

pub mod beats;
pub mod eda;
pub mod hrv;
pub mod respiration;
pub mod spectral;
pub mod stress;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use beats::{detect_beats, IbiSeries};
pub use eda::{eda_segment, EdaConfig, EdaSegment, EdaSegmentation, EdaState};
pub use hrv::{hrv_frequency_domain, hrv_time_domain, FrequencyDomain, HrvFeatures, TimeDomain};
pub use respiration::{respiration_rate, Respiration};
pub use stress::{stress_score, StressAssessment, StressInputs, StressLevel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysioError {
    #[error("signal too short: {have_s:.1} s, need {need_s:.1} s")]
    TooShort { have_s: f64, need_s: f64 },
    #[error("sampling rate {have_hz:.2} Hz below required {need_hz:.2} Hz")]
    RateTooLow { have_hz: f64, need_hz: f64 },
    #[error("too few beats: {have}, need {need}")]
    TooFewBeats { have: usize, need: usize },
    #[error("window too short: {have_s:.1} s, need {need_s:.1} s")]
    WindowTooShort { have_s: f64, need_s: f64 },
    #[error("no dominant respiratory frequency")]
    NoDominantFrequency,
    #[error("baseline for {metric} has {days} days of history, need 3")]
    InsufficientBaseline { metric: String, days: u32 },
    #[error("baseline must be positive, got {0}")]
    InvalidBaseline(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysioConfig {
    pub lf_band: [f64; 2],
    pub hf_band: [f64; 2],
    /// Accepted interbeat interval range, ms.
    pub ibi_range: [f64; 2],
    pub refractory_ms: f64,
    /// Rolling window for the adaptive beat threshold, seconds.
    pub threshold_window_s: f64,
    pub tachogram_hz: f64,
    pub welch_segment_s: f64,
    pub respiration_band: [f64; 2],
    pub stress_low_max: f64,
    pub stress_high_min: f64,
    pub eda: EdaConfig,
}

impl Default for PhysioConfig {
    fn default() -> Self {
        PhysioConfig {
            lf_band: [0.04, 0.15],
            hf_band: [0.15, 0.40],
            ibi_range: [250.0, 3000.0],
            refractory_ms: 333.0,
            threshold_window_s: 10.0,
            tachogram_hz: 4.0,
            welch_segment_s: 64.0,
            respiration_band: [0.1, 0.5],
            stress_low_max: 0.33,
            stress_high_min: 0.66,
            eda: EdaConfig::default(),
        }
    }
}

/// Median sample spacing in ms, used to check effective sampling rates.
pub(crate) fn median_spacing_ms(ts: &[i64]) -> Option<f64> {
    if ts.len() < 2 {
        return None;
    }
    let d: Vec<f64> = ts.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    crate::stats::median(&d)
}
