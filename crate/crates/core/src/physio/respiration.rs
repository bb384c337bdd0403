//! Respiration rate from the pulse amplitude envelope and from respiratory
//! sinus arrhythmia in the tachogram.

use serde::{Deserialize, Serialize};

use super::beats::IbiSeries;
use super::spectral::{dominant_frequency, remove_mean, resample_uniform};
use super::{PhysioConfig, PhysioError};
use crate::ingest::SampleBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RespirationMethod {
    Amplitude,
    Sinus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Respiration {
    /// Breaths per minute from the amplitude envelope.
    pub breaths_per_min: f64,
    pub method: RespirationMethod,
    /// Cross-check from the tachogram, when it has a dominant frequency.
    pub sinus_breaths_per_min: Option<f64>,
}

/// Envelope is considered flat below this coefficient of variation.
const FLAT_CV: f64 = 1e-3;
/// Peak over median band power. Sensor noise alone peaks at roughly ten
/// times the median; a real breathing rhythm sits orders of magnitude above.
const MIN_PEAK_RATIO: f64 = 50.0;

fn dominant_breaths(t: &[f64], v: &[f64], cfg: &PhysioConfig) -> Result<f64, PhysioError> {
    if t.len() < 4 {
        return Err(PhysioError::NoDominantFrequency);
    }
    let mean = crate::stats::mean(v).unwrap_or(0.0);
    let sd = crate::stats::pop_std(v).unwrap_or(0.0);
    if mean.abs() <= f64::EPSILON || sd / mean.abs() < FLAT_CV {
        return Err(PhysioError::NoDominantFrequency);
    }
    let mut x = resample_uniform(t, v, cfg.tachogram_hz);
    remove_mean(&mut x);
    let [lo, hi] = cfg.respiration_band;
    match dominant_frequency(&x, cfg.tachogram_hz, lo, hi) {
        Some(p) if p.power > 0.0 && p.power >= MIN_PEAK_RATIO * p.median => Ok(p.freq * 60.0),
        _ => Err(PhysioError::NoDominantFrequency),
    }
}

pub fn respiration_rate(
    ppg: &SampleBatch,
    ibi: &IbiSeries,
    cfg: &PhysioConfig,
) -> Result<Respiration, PhysioError> {
    let span_s = match (ppg.timestamps.first(), ppg.timestamps.last()) {
        (Some(a), Some(b)) => (b - a) as f64 / 1000.0,
        _ => 0.0,
    };
    if span_s < 60.0 {
        return Err(PhysioError::TooShort {
            have_s: span_s,
            need_s: 60.0,
        });
    }
    let amps: Vec<f64> = if ibi.amplitudes.len() == ibi.beat_times.len() {
        ibi.amplitudes.clone()
    } else {
        ibi.beat_times
            .iter()
            .map(|&t| {
                let i = ppg.timestamps.partition_point(|&s| (s as f64) < t);
                ppg.values[i.min(ppg.values.len() - 1)]
            })
            .collect()
    };
    let a = dominant_breaths(&ibi.beat_times, &amps, cfg)?;
    let b = dominant_breaths(&ibi.ibi_times, &ibi.ibis, cfg).ok();
    Ok(Respiration {
        breaths_per_min: a,
        method: RespirationMethod::Amplitude,
        sinus_breaths_per_min: b,
    })
}
