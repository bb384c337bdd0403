//! Spectral estimation helpers built on `rustfft`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub fn hann(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Linear interpolation of irregular `(t_ms, v)` points onto a uniform grid
/// at `fs` Hz starting at the first point.
pub fn resample_uniform(t_ms: &[f64], v: &[f64], fs: f64) -> Vec<f64> {
    if t_ms.is_empty() {
        return Vec::new();
    }
    let step = 1000.0 / fs;
    let span = t_ms[t_ms.len() - 1] - t_ms[0];
    let n = (span / step).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let t = t_ms[0] + k as f64 * step;
        while j + 1 < t_ms.len() && t_ms[j + 1] < t {
            j += 1;
        }
        if j + 1 >= t_ms.len() {
            out.push(v[v.len() - 1]);
            continue;
        }
        let (t0, t1) = (t_ms[j], t_ms[j + 1]);
        let frac = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
        out.push(v[j] + (v[j + 1] - v[j]) * frac);
    }
    out
}

pub fn remove_mean(x: &mut [f64]) {
    if let Some(m) = crate::stats::mean(x) {
        x.iter_mut().for_each(|v| *v -= m);
    }
}

/// One-sided power spectral density of a windowed, zero-padded segment.
/// Units are signal² per Hz so that summing `psd * df` recovers the variance.
fn periodogram(
    planner: &mut FftPlanner<f64>,
    x: &[f64],
    window: &[f64],
    nfft: usize,
    fs: f64,
) -> Vec<f64> {
    let fft = planner.plan_fft_forward(nfft);
    let mut buf: Vec<Complex<f64>> = (0..nfft)
        .map(|i| Complex::new(if i < x.len() { x[i] * window[i] } else { 0.0 }, 0.0))
        .collect();
    fft.process(&mut buf);
    let u: f64 = window.iter().map(|w| w * w).sum();
    let scale = 1.0 / (fs * u);
    let half = nfft / 2;
    (0..=half)
        .map(|k| {
            let p = buf[k].norm_sqr() * scale;
            if k == 0 || (nfft % 2 == 0 && k == half) {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

/// Welch averaged periodogram with a Hann taper. Returns `(freqs, psd)`.
/// Trailing samples that do not fill a segment are ignored.
pub fn welch(x: &[f64], fs: f64, seg_len: usize, overlap: usize) -> (Vec<f64>, Vec<f64>) {
    let seg_len = seg_len.min(x.len()).max(1);
    let step = (seg_len - overlap.min(seg_len - 1)).max(1);
    let window = hann(seg_len);
    let mut planner = FftPlanner::new();
    let mut acc = vec![0.0; seg_len / 2 + 1];
    let mut count = 0usize;
    let mut start = 0;
    while start + seg_len <= x.len() {
        let p = periodogram(&mut planner, &x[start..start + seg_len], &window, seg_len, fs);
        acc.iter_mut().zip(p).for_each(|(a, v)| *a += v);
        count += 1;
        start += step;
    }
    if count > 0 {
        acc.iter_mut().for_each(|a| *a /= count as f64);
    }
    let df = fs / seg_len as f64;
    let freqs = (0..acc.len()).map(|k| k as f64 * df).collect();
    (freqs, acc)
}

/// Sum of `psd * df` over bins with `lo <= f < hi`.
pub fn band_power(freqs: &[f64], psd: &[f64], lo: f64, hi: f64) -> f64 {
    if freqs.len() < 2 {
        return 0.0;
    }
    let df = freqs[1] - freqs[0];
    freqs
        .iter()
        .zip(psd)
        .filter(|(f, _)| **f >= lo && **f < hi)
        .map(|(_, p)| p * df)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub freq: f64,
    pub power: f64,
    /// Median power over the band.
    pub median: f64,
}

/// Strongest frequency in `[lo, hi]` of a Hann-windowed, zero-padded
/// periodogram.
pub fn dominant_frequency(x: &[f64], fs: f64, lo: f64, hi: f64) -> Option<SpectralPeak> {
    if x.len() < 4 {
        return None;
    }
    let nfft = (x.len() * 8).next_power_of_two();
    let window = hann(x.len());
    let mut planner = FftPlanner::new();
    let p = periodogram(&mut planner, x, &window, nfft, fs);
    let df = fs / nfft as f64;
    let band: Vec<(f64, f64)> = p
        .iter()
        .enumerate()
        .map(|(k, v)| (k as f64 * df, *v))
        .filter(|(f, _)| *f >= lo && *f <= hi)
        .collect();
    let (freq, power) = band
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    let powers: Vec<f64> = band.iter().map(|b| b.1).collect();
    let median = crate::stats::median(&powers)?;
    Some(SpectralPeak { freq, power, median })
}
