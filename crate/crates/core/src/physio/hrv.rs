//! Time and frequency domain heart rate variability.

use serde::{Deserialize, Serialize};

use super::beats::IbiSeries;
use super::spectral::{band_power, remove_mean, resample_uniform, welch};
use super::{PhysioConfig, PhysioError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeDomain {
    pub mean_hr: f64,
    pub sdnn: f64,
    pub rmssd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyDomain {
    pub lf_power: f64,
    pub hf_power: f64,
    /// `None` when the HF power is zero.
    pub lf_hf_ratio: Option<f64>,
    /// Power over the union of both bands, for consistency checks.
    pub total_power: f64,
}

/// Features for one analysis window; the frequency part needs at least two
/// minutes of beats and is absent for shorter windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrvFeatures {
    pub mean_hr: f64,
    pub sdnn: f64,
    pub rmssd: f64,
    pub lf_power: Option<f64>,
    pub hf_power: Option<f64>,
    pub lf_hf_ratio: Option<f64>,
    pub window: [i64; 2],
}

impl HrvFeatures {
    pub fn new(td: TimeDomain, fd: Option<FrequencyDomain>, window: [i64; 2]) -> Self {
        HrvFeatures {
            mean_hr: td.mean_hr,
            sdnn: td.sdnn,
            rmssd: td.rmssd,
            lf_power: fd.map(|f| f.lf_power),
            hf_power: fd.map(|f| f.hf_power),
            lf_hf_ratio: fd.and_then(|f| f.lf_hf_ratio),
            window,
        }
    }
}

pub fn rmssd(ibis: &[f64]) -> Option<f64> {
    if ibis.len() < 2 {
        return None;
    }
    let n = (ibis.len() - 1) as f64;
    let ss: f64 = ibis.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Some((ss / n).sqrt())
}

pub fn time_domain(ibis: &[f64]) -> Result<TimeDomain, PhysioError> {
    if ibis.len() < 2 {
        return Err(PhysioError::TooFewBeats {
            have: ibis.len(),
            need: 2,
        });
    }
    let mean = crate::stats::mean(ibis).expect("non-empty");
    Ok(TimeDomain {
        mean_hr: 60_000.0 / mean,
        sdnn: crate::stats::pop_std(ibis).expect("non-empty"),
        rmssd: rmssd(ibis).expect("len >= 2"),
    })
}

/// Time-domain features over intervals ending inside `window`.
pub fn hrv_time_domain(ibi: &IbiSeries, window: [i64; 2]) -> Result<TimeDomain, PhysioError> {
    let (_, d) = ibi.window(window[0] as f64, window[1] as f64);
    time_domain(&d)
}

/// LF and HF power of the 4 Hz tachogram, Welch averaged.
pub fn hrv_frequency_domain(
    ibi: &IbiSeries,
    window: [i64; 2],
    cfg: &PhysioConfig,
) -> Result<FrequencyDomain, PhysioError> {
    let span_s = (window[1] - window[0]) as f64 / 1000.0;
    if span_s < 120.0 {
        return Err(PhysioError::WindowTooShort {
            have_s: span_s,
            need_s: 120.0,
        });
    }
    let (t, d) = ibi.window(window[0] as f64, window[1] as f64);
    if d.len() < 60 {
        return Err(PhysioError::TooFewBeats {
            have: d.len(),
            need: 60,
        });
    }
    let fs = cfg.tachogram_hz;
    let mut x = resample_uniform(&t, &d, fs);
    remove_mean(&mut x);
    let seg = ((cfg.welch_segment_s * fs).round() as usize).min(x.len());
    let (freqs, psd) = welch(&x, fs, seg, seg / 2);
    let lf = band_power(&freqs, &psd, cfg.lf_band[0], cfg.lf_band[1]);
    let hf = band_power(&freqs, &psd, cfg.hf_band[0], cfg.hf_band[1]);
    let total = band_power(&freqs, &psd, cfg.lf_band[0], cfg.hf_band[1]);
    Ok(FrequencyDomain {
        lf_power: lf,
        hf_power: hf,
        lf_hf_ratio: (hf > 0.0).then(|| lf / hf),
        total_power: total,
    })
}

/// Both feature groups; the frequency part is attempted only when the
/// window is long enough.
pub fn hrv_features(
    ibi: &IbiSeries,
    window: [i64; 2],
    cfg: &PhysioConfig,
) -> Result<HrvFeatures, PhysioError> {
    let td = hrv_time_domain(ibi, window)?;
    let fd = hrv_frequency_domain(ibi, window, cfg).ok();
    Ok(HrvFeatures::new(td, fd, window))
}
