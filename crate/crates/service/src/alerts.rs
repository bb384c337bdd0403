//! Provider alerts and the trackers that decide when to raise them.

use mhn_core::estimator::ScreenBand;
use mhn_core::time::EpochMs;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertKind {
    ScreenBandIncrease,
    SustainedHighStress,
    PlanDrift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertState {
    Open,
    Acknowledged,
}

impl std::str::FromStr for AlertState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" => Ok(AlertState::Open),
            "acknowledged" => Ok(AlertState::Acknowledged),
            _ => Err(format!("unknown alert state {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub id: String,
    pub subject: String,
    pub kind: AlertKind,
    /// Data time of the triggering observation.
    pub created_at: EpochMs,
    pub payload: serde_json::Value,
    pub state: AlertState,
    pub acknowledged_at: Option<EpochMs>,
}

/// Fires once each time the band climbs to or past `boundary`, then stays
/// quiet until the band drops back below it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenCrossing {
    above: bool,
}

impl ScreenCrossing {
    pub fn observe(&mut self, band: ScreenBand, boundary: ScreenBand) -> bool {
        let now = band >= boundary;
        let fire = now && !self.above;
        self.above = now;
        fire
    }

    pub fn is_above(&self) -> bool {
        self.above
    }
}

/// Counts consecutive high-stress windows; fires when the run reaches
/// `needed` and not again until the run breaks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StressRun {
    pub run: usize,
}

impl StressRun {
    pub fn observe(&mut self, high: bool, needed: usize) -> bool {
        if high {
            self.run += 1;
            self.run == needed
        } else {
            self.run = 0;
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ScreenBand::*;

    #[test]
    fn minimal_steady_is_quiet() {
        let mut c = ScreenCrossing::default();
        assert!(!(0..10).any(|_| c.observe(Minimal, Moderate)));
    }

    #[test]
    fn one_alert_for_a_held_rise() {
        let mut c = ScreenCrossing::default();
        let fired: Vec<bool> =
            [Minimal, Moderate, Moderate, Moderate, Moderate, Moderate, Moderate].iter().map(|b| c.observe(*b, Moderate)).collect();
        assert_eq!(fired.iter().filter(|f| **f).count(), 1);
        assert!(fired[1]);
    }

    #[test]
    fn personalized_boundary_fires_earlier() {
        let mut c = ScreenCrossing::default();
        assert!(c.observe(Mild, Mild));
        let mut d = ScreenCrossing::default();
        assert!(!d.observe(Mild, Moderate));
    }

    #[test]
    fn stress_run_fires_at_six() {
        let mut r = StressRun::default();
        let seq = [true, true, true, true, true, false, true, true, true, true, true, true, true, true];
        let fired: Vec<usize> = seq.iter().enumerate().filter(|(_, h)| r.observe(**h, 6)).map(|(i, _)| i).collect();
        assert_eq!(fired, vec![11]);
    }
}
