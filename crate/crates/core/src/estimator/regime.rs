use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{DailyFeatures, EstimatorConfig, EstimatorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    WellBeing,
    PoorMood,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimePhase {
    pub phase: Phase,
    /// Day indices into the input table, inclusive.
    pub start_day: usize,
    pub end_day: usize,
    pub start_date: Option<NaiveDate>,
    pub end_date: Option<NaiveDate>,
}

impl RegimePhase {
    pub fn len(&self) -> usize {
        self.end_day - self.start_day + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn zscores(xs: &[Option<f64>]) -> Vec<Option<f64>> {
    let vals: Vec<f64> = xs.iter().flatten().copied().collect();
    let m = crate::stats::mean(&vals).unwrap_or(0.0);
    let sd = crate::stats::pop_std(&vals).unwrap_or(0.0);
    xs.iter()
        .map(|x| x.map(|v| if sd > 1e-12 { (v - m) / sd } else { 0.0 }))
        .collect()
}

/// Daily index: mean of the available z-scored signals, oriented so that
/// larger means worse.
pub fn composite_index(days: &[DailyFeatures]) -> Vec<f64> {
    let col = |f: &dyn Fn(&DailyFeatures) -> Option<f64>| -> Vec<Option<f64>> {
        days.iter().map(f).collect()
    };
    let signals: [(Vec<Option<f64>>, f64); 5] = [
        (
            zscores(&col(&|d| Some(d.mean_negative? - d.mean_positive?))),
            1.0,
        ),
        (zscores(&col(&|d| d.sleep_score)), -1.0),
        (zscores(&col(&|d| d.rmssd)), -1.0),
        (zscores(&col(&|d| d.steps)), -1.0),
        (zscores(&col(&|d| d.home_minutes)), 1.0),
    ];
    (0..days.len())
        .map(|i| {
            let zs: Vec<f64> = signals.iter().filter_map(|(z, s)| z[i].map(|v| s * v)).collect();
            crate::stats::mean(&zs).unwrap_or(0.0)
        })
        .collect()
}

/// Two-state segmentation of the smoothed composite index.
pub fn detect_regime(
    days: &[DailyFeatures],
    cfg: &EstimatorConfig,
) -> Result<Vec<RegimePhase>, EstimatorError> {
    let n = days.len();
    if n < cfg.regime_min_days {
        return Err(EstimatorError::TooShort { have: n, need: cfg.regime_min_days });
    }
    let idx = composite_index(days);
    let back = (cfg.regime_ma_days.max(1) - 1) / 2;
    let fwd = cfg.regime_ma_days.max(1) / 2;
    let ma: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(back);
            let hi = (i + fwd + 1).min(n);
            idx[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let half = cfg.regime_hysteresis / 2.0;
    let mut poor = ma[0] > 0.0;
    let mut labels = Vec::with_capacity(n);
    for &v in &ma {
        if poor && v < -half {
            poor = false;
        } else if !poor && v > half {
            poor = true;
        }
        labels.push(poor);
    }

    let mut runs: Vec<(bool, usize)> = Vec::new();
    for l in labels {
        match runs.last_mut() {
            Some((p, len)) if *p == l => *len += 1,
            _ => runs.push((l, 1)),
        }
    }
    // Fold short runs into their longer neighbor, leftmost first.
    while runs.len() > 1 {
        let Some(i) = runs.iter().position(|r| r.1 < cfg.regime_min_phase_days) else {
            break;
        };
        let left = i.checked_sub(1).map(|j| runs[j].1);
        let right = runs.get(i + 1).map(|r| r.1);
        let into = match (left, right) {
            (Some(l), Some(r)) => if r > l { i + 1 } else { i - 1 },
            (Some(_), None) => i - 1,
            _ => i + 1,
        };
        runs[into].1 += runs[i].1;
        runs.remove(i);
        let mut merged: Vec<(bool, usize)> = Vec::new();
        for r in runs {
            match merged.last_mut() {
                Some((p, len)) if *p == r.0 => *len += r.1,
                _ => merged.push(r),
            }
        }
        runs = merged;
    }

    let mut out = Vec::new();
    let mut start = 0;
    for (p, len) in runs {
        let end = start + len - 1;
        out.push(RegimePhase {
            phase: if p { Phase::PoorMood } else { Phase::WellBeing },
            start_day: start,
            end_day: end,
            start_date: days[start].date,
            end_date: days[end].date,
        });
        start = end + 1;
    }
    Ok(out)
}
