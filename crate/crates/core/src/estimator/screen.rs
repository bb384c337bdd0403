use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DailyFeatures, EstimatorConfig, EstimatorError};
use crate::personal_model::{Metric, PersonalBaseline};
use crate::stats::{clamp01, mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreenBand {
    Minimal,
    Mild,
    Moderate,
    Severe,
}

impl ScreenBand {
    pub const ALL: [ScreenBand; 4] =
        [ScreenBand::Minimal, ScreenBand::Mild, ScreenBand::Moderate, ScreenBand::Severe];

    /// One band down, saturating at minimal.
    pub fn lower(self) -> Self {
        match self {
            ScreenBand::Severe => ScreenBand::Moderate,
            ScreenBand::Moderate => ScreenBand::Mild,
            _ => ScreenBand::Minimal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScreenBand::Minimal => "minimal",
            ScreenBand::Mild => "mild",
            ScreenBand::Moderate => "moderate",
            ScreenBand::Severe => "severe",
        }
    }
}

impl std::str::FromStr for ScreenBand {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScreenBand::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown screen band {s:?}"))
    }
}

/// 0–13 minimal, 14–19 mild, 20–28 moderate, 29–63 severe.
pub fn screen_band(score: u32) -> ScreenBand {
    match score {
        0..=13 => ScreenBand::Minimal,
        14..=19 => ScreenBand::Mild,
        20..=28 => ScreenBand::Moderate,
        _ => ScreenBand::Severe,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepressionScreen {
    pub score: u32,
    pub band: ScreenBand,
    pub window_days: usize,
    pub days_with_data: usize,
    /// Deficit terms in [0, 1].
    pub contributors: BTreeMap<String, f64>,
}

/// Two-week screen: the mean of four deficit terms scaled to 0–63.
///
/// Sleep, activity and isolation deficits are the window mean's z-score
/// against the personal baseline divided by three and clamped to [0, 1].
pub fn screen_depression(
    window: &[DailyFeatures],
    baseline: &PersonalBaseline,
    cfg: &EstimatorConfig,
) -> Result<DepressionScreen, EstimatorError> {
    let window = &window[window.len().saturating_sub(cfg.screen_window_days)..];
    let days = window.iter().filter(|d| d.has_data()).count();
    if days < cfg.screen_min_days {
        return Err(EstimatorError::InsufficientData { have: days, need: cfg.screen_min_days });
    }
    let avg = |f: fn(&DailyFeatures) -> Option<f64>| {
        let xs: Vec<f64> = window.iter().filter_map(f).collect();
        mean(&xs)
    };
    let deficit = |metric: Metric, value: Option<f64>, sign: f64| {
        value.map(|v| clamp01(sign * baseline.z(metric, v) / 3.0))
    };
    let mut contributors = BTreeMap::new();
    if let Some(na) = avg(|d| d.mean_negative) {
        contributors.insert("negative_affect".to_string(), clamp01(na / 100.0));
    }
    if let Some(t) = deficit(Metric::SleepScore, avg(|d| d.sleep_score), -1.0) {
        contributors.insert("sleep_deficit".to_string(), t);
    }
    if let Some(t) = deficit(Metric::Steps, avg(|d| d.steps), -1.0) {
        contributors.insert("activity_deficit".to_string(), t);
    }
    if let Some(t) = deficit(Metric::HomeMinutes, avg(|d| d.home_minutes), 1.0) {
        contributors.insert("isolation".to_string(), t);
    }
    let m = contributors.values().sum::<f64>() / contributors.len().max(1) as f64;
    let score = (63.0 * m).round().clamp(0.0, 63.0) as u32;
    Ok(DepressionScreen {
        score,
        band: screen_band(score),
        window_days: window.len(),
        days_with_data: days,
        contributors,
    })
}
