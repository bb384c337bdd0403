//! Beat detection on PPG and interbeat-interval extraction.

use serde::{Deserialize, Serialize};

use super::{median_spacing_ms, PhysioConfig, PhysioError};
use crate::ingest::SampleBatch;
use crate::stats::quantile_sorted;

/// Detected beats and the interbeat intervals that survived range gating.
///
/// `ibis[k]` is the interval ending at `ibi_times[k]`; intervals outside the
/// plausible range are removed and counted in `dropped`, so `ibis` may be
/// shorter than `beat_times.len() - 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IbiSeries {
    /// Sub-sample beat times, epoch ms.
    pub beat_times: Vec<f64>,
    /// Interpolated pulse amplitude at each beat.
    pub amplitudes: Vec<f64>,
    pub ibis: Vec<f64>,
    pub ibi_times: Vec<f64>,
    pub dropped: usize,
}

impl IbiSeries {
    /// Builds a series directly from beat times (used by tests and the simulator ledger).
    pub fn from_beat_times(beat_times: Vec<f64>, range: [f64; 2]) -> Self {
        let amplitudes = vec![1.0; beat_times.len()];
        Self::from_beats(beat_times, amplitudes, range)
    }

    pub fn from_beats(beat_times: Vec<f64>, amplitudes: Vec<f64>, range: [f64; 2]) -> Self {
        let mut ibis = Vec::new();
        let mut ibi_times = Vec::new();
        let mut dropped = 0;
        for w in beat_times.windows(2) {
            let d = w[1] - w[0];
            if d >= range[0] && d <= range[1] {
                ibis.push(d);
                ibi_times.push(w[1]);
            } else {
                dropped += 1;
            }
        }
        IbiSeries {
            beat_times,
            amplitudes,
            ibis,
            ibi_times,
            dropped,
        }
    }

    /// Builds a series from intervals alone, anchoring the first beat at `t0`.
    pub fn from_ibis(t0: f64, ibis: &[f64], range: [f64; 2]) -> Self {
        let mut beats = Vec::with_capacity(ibis.len() + 1);
        let mut t = t0;
        beats.push(t);
        for d in ibis {
            t += d;
            beats.push(t);
        }
        Self::from_beat_times(beats, range)
    }

    /// Intervals whose end time falls in `[from, to]`.
    pub fn window(&self, from: f64, to: f64) -> (Vec<f64>, Vec<f64>) {
        self.ibi_times
            .iter()
            .zip(&self.ibis)
            .filter(|(t, _)| **t >= from && **t <= to)
            .map(|(t, d)| (*t, *d))
            .unzip()
    }
}

/// Peak offset and height from three samples around a local maximum.
/// Uses a parabola through the log values when all are positive, which is
/// exact for Gaussian pulses.
fn refine_peak(ym: f64, y0: f64, yp: f64) -> (f64, f64) {
    let (a, b, c, log) = if ym > 0.0 && y0 > 0.0 && yp > 0.0 {
        (ym.ln(), y0.ln(), yp.ln(), true)
    } else {
        (ym, y0, yp, false)
    };
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return (0.0, y0);
    }
    let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    let peak = b - 0.25 * (a - c) * delta;
    (delta, if log { peak.exp() } else { peak })
}

/// Local maxima above a rolling `median + 0.5 * IQR` threshold with a
/// refractory period; the threshold is recomputed once per second over a
/// centered window.
pub fn detect_beats(ppg: &SampleBatch, cfg: &PhysioConfig) -> Result<IbiSeries, PhysioError> {
    let ts = &ppg.timestamps;
    let x = &ppg.values;
    let span_s = match (ts.first(), ts.last()) {
        (Some(a), Some(b)) => (b - a) as f64 / 1000.0,
        _ => 0.0,
    };
    let nominal = ppg.descriptor.nominal_rate_hz;
    let effective = median_spacing_ms(ts).map(|d| 1000.0 / d).unwrap_or(0.0);
    let have_hz = if ts.len() >= 2 { effective } else { nominal };
    if nominal < 25.0 - 1e-9 || have_hz < 25.0 * 0.99 {
        return Err(PhysioError::RateTooLow {
            have_hz: nominal.min(have_hz),
            need_hz: 25.0,
        });
    }
    if span_s < 10.0 {
        return Err(PhysioError::TooShort {
            have_s: span_s,
            need_s: 10.0,
        });
    }

    let half_ms = (cfg.threshold_window_s * 500.0) as i64;
    let t0 = ts[0];
    let n_blocks = ((ts[ts.len() - 1] - t0) / 1000 + 1) as usize;
    let mut thresholds = Vec::with_capacity(n_blocks);
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut buf = Vec::new();
    for b in 0..n_blocks {
        let center = t0 + b as i64 * 1000 + 500;
        while lo < ts.len() && ts[lo] < center - half_ms {
            lo += 1;
        }
        while hi < ts.len() && ts[hi] <= center + half_ms {
            hi += 1;
        }
        buf.clear();
        buf.extend_from_slice(&x[lo..hi.max(lo)]);
        buf.sort_by(f64::total_cmp);
        let thr = match (
            quantile_sorted(&buf, 0.5),
            quantile_sorted(&buf, 0.25),
            quantile_sorted(&buf, 0.75),
        ) {
            (Some(m), Some(q1), Some(q3)) => m + 0.5 * (q3 - q1),
            _ => f64::INFINITY,
        };
        thresholds.push(thr);
    }

    let mut beats: Vec<f64> = Vec::new();
    let mut amps: Vec<f64> = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        let block = ((ts[i] - t0) / 1000) as usize;
        if !(x[i] > x[i - 1] && x[i] >= x[i + 1] && x[i] > thresholds[block]) {
            continue;
        }
        let (delta, amp) = refine_peak(x[i - 1], x[i], x[i + 1]);
        let step = if delta >= 0.0 { ts[i + 1] - ts[i] } else { ts[i] - ts[i - 1] } as f64;
        let t = ts[i] as f64 + delta * step;
        match beats.last() {
            Some(&last) if t - last < cfg.refractory_ms => {
                if amp > *amps.last().unwrap_or(&f64::NEG_INFINITY) {
                    *beats.last_mut().expect("non-empty") = t;
                    *amps.last_mut().expect("non-empty") = amp;
                }
            }
            _ => {
                beats.push(t);
                amps.push(amp);
            }
        }
    }
    Ok(IbiSeries::from_beats(beats, amps, cfg.ibi_range))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chronicle::SubjectId;
    use crate::ingest::Channel;

    /// Gaussian pulse train sampled at 25 Hz from explicit beat times.
    pub(crate) fn pulse_train(beats: &[f64], dur_ms: i64) -> SampleBatch {
        let ts: Vec<i64> = (0..dur_ms / 40).map(|i| i * 40).collect();
        let vs: Vec<f64> = ts
            .iter()
            .map(|&t| {
                beats
                    .iter()
                    .map(|b| {
                        let d = (t as f64 - b) / 60.0;
                        (-0.5 * d * d).exp()
                    })
                    .sum()
            })
            .collect();
        SampleBatch::new(
            SubjectId::new("t").unwrap(),
            Channel::Ppg.default_descriptor(),
            ts,
            vs,
        )
        .unwrap()
    }

    #[test]
    fn one_beat_per_second_gives_sixty_bpm() {
        let beats: Vec<f64> = (0..60).map(|k| 500.0 + 1000.0 * k as f64).collect();
        let ibi = detect_beats(&pulse_train(&beats, 60_000), &PhysioConfig::default()).unwrap();
        assert_eq!(ibi.ibis.len(), 59);
        assert!(ibi.ibis.iter().all(|d| (d - 1000.0).abs() <= 1.0));
    }

    #[test]
    fn flat_line_has_no_beats() {
        let b = SampleBatch::new(
            SubjectId::new("t").unwrap(),
            Channel::Ppg.default_descriptor(),
            (0..1000).map(|i| i * 40).collect(),
            vec![0.7; 1000],
        )
        .unwrap();
        let ibi = detect_beats(&b, &PhysioConfig::default()).unwrap();
        assert!(ibi.beat_times.is_empty() && ibi.ibis.is_empty());
    }

    #[test]
    fn alternating_intervals_match_construction() {
        let mut beats = vec![317.0];
        for k in 0..80 {
            let d = if k % 2 == 0 { 800.0 } else { 1200.0 };
            beats.push(beats[k] + d);
        }
        let dur = (*beats.last().unwrap() as i64) + 500;
        let ibi = detect_beats(&pulse_train(&beats, dur), &PhysioConfig::default()).unwrap();
        assert_eq!(ibi.ibis.len(), beats.len() - 1);
        for (got, want) in ibi.ibis.iter().zip(beats.windows(2).map(|w| w[1] - w[0])) {
            assert!((got - want).abs() <= 40.0, "{got} vs {want}");
        }
    }

    #[test]
    fn periodic_trains_recover_period() {
        for p in [600.0, 800.0, 1000.0, 1200.0] {
            let beats: Vec<f64> = (0..100).map(|k| 123.0 + p * k as f64).collect();
            let dur = (*beats.last().unwrap() as i64) + 300;
            let ibi = detect_beats(&pulse_train(&beats, dur), &PhysioConfig::default()).unwrap();
            assert_eq!(ibi.ibis.len(), 99, "period {p}");
            assert!(ibi.ibis.iter().all(|d| (d - p).abs() <= 40.0));
        }
    }

    #[test]
    fn rejects_short_and_slow_signals() {
        let beats = [500.0];
        let short = pulse_train(&beats, 5_000);
        assert!(matches!(
            detect_beats(&short, &PhysioConfig::default()),
            Err(PhysioError::TooShort { .. })
        ));
        let mut slow = pulse_train(&beats, 20_000);
        slow.descriptor.nominal_rate_hz = 10.0;
        assert!(matches!(
            detect_beats(&slow, &PhysioConfig::default()),
            Err(PhysioError::RateTooLow { .. })
        ));
    }

    #[test]
    fn out_of_range_intervals_are_dropped() {
        let s = IbiSeries::from_beat_times(vec![0.0, 100.0, 1100.0, 5000.0, 5800.0], [250.0, 3000.0]);
        assert_eq!(s.ibis, vec![1000.0, 800.0]);
        assert_eq!(s.dropped, 2);
    }
}
