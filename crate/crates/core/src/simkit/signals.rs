//! Waveform synthesis: Gaussian pulse trains for PPG and stimulus
//! responses on a skin-conductance baseline.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::time::EpochMs;

const PPG_PERIOD_MS: i64 = 40;
const GSR_PERIOD_MS: i64 = 250;
const PULSE_SIGMA_MS: f64 = 60.0;
const AMP_DEPTH: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    pub timestamps: Vec<EpochMs>,
    pub values: Vec<f64>,
    /// True beat times inside the window, epoch ms.
    pub beats: Vec<f64>,
}

/// Synthesizes `[start, start + secs)` of 25 Hz PPG.
///
/// Each interval is `60000 / hr(t)` plus respiratory and 0.1 Hz sinusoids;
/// pulse amplitude follows the respiration phase. Modulation phases are
/// measured from the epoch so adjacent windows stay coherent.
#[allow(clippy::too_many_arguments)]
pub fn pulse_train<R: Rng>(
    rng: &mut R,
    start: EpochMs,
    secs: u32,
    hr: &dyn Fn(f64) -> f64,
    resp_depth_ms: f64,
    lf_depth_ms: f64,
    resp_hz: f64,
    amplitude_modulation: bool,
) -> PulseTrain {
    let end = start + secs as i64 * 1000;
    let noise = Normal::new(0.0, 0.004).unwrap();
    let ibi_at = |t: f64| {
        let s = t / 1000.0;
        60_000.0 / hr(t) + resp_depth_ms * (2.0 * PI * resp_hz * s).sin() + lf_depth_ms * (2.0 * PI * 0.1 * s).sin()
    };
    let amp_at = |t: f64| {
        if amplitude_modulation {
            1.0 + AMP_DEPTH * (2.0 * PI * resp_hz * t / 1000.0).sin()
        } else {
            1.0
        }
    };
    // Pulses from slightly before the window so its first samples are realistic.
    let mut t = start as f64 - rng.gen_range(0.0..ibi_at(start as f64));
    let mut all = Vec::new();
    while t < (end + 1000) as f64 {
        all.push(t);
        t += ibi_at(t);
    }
    let n = (end - start) / PPG_PERIOD_MS;
    let timestamps: Vec<EpochMs> = (0..n).map(|k| start + k * PPG_PERIOD_MS).collect();
    let reach = 5.0 * PULSE_SIGMA_MS;
    let mut first = 0;
    let values = timestamps
        .iter()
        .map(|&ts| {
            let ts = ts as f64;
            while first < all.len() && all[first] < ts - reach {
                first += 1;
            }
            let mut v = 0.0;
            for &b in all[first..].iter().take_while(|b| **b <= ts + reach) {
                let d = (ts - b) / PULSE_SIGMA_MS;
                v += amp_at(b) * (-0.5 * d * d).exp();
            }
            round4(v + noise.sample(rng))
        })
        .collect();
    let beats = all.into_iter().filter(|b| *b >= start as f64 && *b < end as f64).collect();
    PulseTrain { timestamps, values, beats }
}

/// Skin-conductance response: linear rise, plateau, exponential decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stimulus {
    pub onset_ms: EpochMs,
    pub rise_s: f64,
    pub amp: f64,
    pub plateau_s: f64,
    pub tau_s: f64,
}

impl Stimulus {
    pub fn random<R: Rng>(rng: &mut R, onset_ms: EpochMs) -> Self {
        Stimulus {
            onset_ms,
            rise_s: rng.gen_range(2.0..4.0),
            amp: rng.gen_range(0.3..0.9),
            plateau_s: rng.gen_range(1.0..3.0),
            tau_s: rng.gen_range(3.0..8.0),
        }
    }

    pub fn response(&self, t: EpochMs) -> f64 {
        let s = (t - self.onset_ms) as f64 / 1000.0;
        if s <= 0.0 {
            0.0
        } else if s < self.rise_s {
            self.amp * s / self.rise_s
        } else if s < self.rise_s + self.plateau_s {
            self.amp
        } else {
            self.amp * (-(s - self.rise_s - self.plateau_s) / self.tau_s).exp()
        }
    }
}

/// 4 Hz conductance over `[start, start + secs)` with Poisson stimuli.
pub fn gsr_trace<R: Rng>(
    rng: &mut R,
    start: EpochMs,
    secs: u32,
    baseline: f64,
    stimuli_per_hour: f64,
) -> (Vec<EpochMs>, Vec<f64>, Vec<Stimulus>) {
    let end = start + secs as i64 * 1000;
    let mut stimuli = Vec::new();
    if stimuli_per_hour > 0.0 {
        let gap = rand_distr::Exp::new(stimuli_per_hour / 3_600_000.0).unwrap();
        let mut t = start as f64 + gap.sample(rng);
        // Leave room for the response to settle before the window closes.
        while t < (end - 20_000) as f64 {
            stimuli.push(Stimulus::random(rng, t as EpochMs));
            t += gap.sample(rng).max(12_000.0);
        }
    }
    let noise = Normal::new(0.0, 0.001).unwrap();
    let n = (end - start) / GSR_PERIOD_MS;
    let ts: Vec<EpochMs> = (0..n).map(|k| start + k * GSR_PERIOD_MS).collect();
    let vs = ts
        .iter()
        .map(|&t| round4(baseline + stimuli.iter().map(|s| s.response(t)).sum::<f64>() + noise.sample(rng)))
        .collect();
    (ts, vs, stimuli)
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn constant_rate_train_has_expected_beats() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let p = pulse_train(&mut rng, 0, 60, &|_| 60.0, 0.0, 0.0, 0.25, false);
        assert_eq!(p.timestamps.len(), 1500);
        assert!((59..=61).contains(&p.beats.len()), "{}", p.beats.len());
        for w in p.beats.windows(2) {
            assert!((w[1] - w[0] - 1000.0).abs() < 1e-9);
        }
        // Sample nearest a beat sits at the pulse crest (amplitude 1).
        let b = p.beats[10];
        let k = (b / 40.0).round() as usize;
        assert!(p.values[k] > 0.9);
    }

    #[test]
    fn stimulus_shape() {
        let s = Stimulus { onset_ms: 1000, rise_s: 2.0, amp: 1.0, plateau_s: 1.0, tau_s: 2.0 };
        assert_eq!(s.response(1000), 0.0);
        assert!((s.response(2000) - 0.5).abs() < 1e-12);
        assert_eq!(s.response(3500), 1.0);
        assert!((s.response(6000) - (-1.0f64).exp()).abs() < 1e-12);
    }
}
