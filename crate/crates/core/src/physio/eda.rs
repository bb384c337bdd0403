//! Four-state segmentation of skin conductance.

use serde::{Deserialize, Serialize};

use super::{median_spacing_ms, PhysioError};
use crate::ingest::SampleBatch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdaConfig {
    /// Slope that starts an arousal, µS/s.
    pub theta_rise: f64,
    /// Slope magnitude treated as flat, µS/s.
    pub theta_flat: f64,
    /// Return-to-baseline tolerance as a fraction of baseline.
    pub epsilon: f64,
    pub smoothing_s: f64,
    /// How long the slope must stay above `theta_rise`.
    pub min_rise_s: f64,
}

impl Default for EdaConfig {
    fn default() -> Self {
        EdaConfig {
            theta_rise: 0.05,
            theta_flat: 0.01,
            epsilon: 0.05,
            smoothing_s: 0.5,
            min_rise_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdaState {
    Normal,
    Arousal,
    Peak,
    Relax,
}

impl EdaState {
    /// Transitions allowed by the stimulus-response cycle. A new stimulus may
    /// interrupt a peak or a relaxation before the signal recovers.
    pub fn may_follow(self, prev: EdaState) -> bool {
        use EdaState::*;
        matches!(
            (prev, self),
            (Normal, Arousal)
                | (Arousal, Peak)
                | (Peak, Arousal)
                | (Peak, Relax)
                | (Relax, Normal)
                | (Relax, Arousal)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdaSegment {
    pub state: EdaState,
    pub start_ms: i64,
    pub end_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaSegmentation {
    pub segments: Vec<EdaSegment>,
    pub baseline: f64,
}

impl EdaSegmentation {
    pub fn states(&self) -> Vec<EdaState> {
        self.segments.iter().map(|s| s.state).collect()
    }

    /// Arousal episodes that start a new cycle, i.e. not re-entered from a peak.
    pub fn cycle_count(&self) -> usize {
        self.segments
            .iter()
            .enumerate()
            .filter(|(i, s)| {
                s.state == EdaState::Arousal
                    && (*i == 0 || self.segments[i - 1].state != EdaState::Peak)
            })
            .count()
    }

    /// Fraction of the span spent in arousal or peak.
    pub fn arousal_fraction(&self) -> f64 {
        let (Some(first), Some(last)) = (self.segments.first(), self.segments.last()) else {
            return 0.0;
        };
        let span = (last.end_ms - first.start_ms) as f64;
        if span <= 0.0 {
            return 0.0;
        }
        let aroused: i64 = self
            .segments
            .iter()
            .filter(|s| matches!(s.state, EdaState::Arousal | EdaState::Peak))
            .map(|s| s.end_ms - s.start_ms)
            .sum();
        aroused as f64 / span
    }

    pub fn obeys_grammar(&self) -> bool {
        self.segments.windows(2).all(|w| {
            w[1].state.may_follow(w[0].state) && w[0].end_ms == w[1].start_ms
        })
    }
}

/// Centered moving average of the forward-difference slope, µS/s.
fn smoothed_slope(ts: &[i64], x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = if i + 1 < n { (i, i + 1) } else { (i - 1, i) };
            (x[b] - x[a]) / ((ts[b] - ts[a]) as f64 / 1000.0)
        })
        .collect();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + raw[i];
    }
    let back = (width - 1) / 2;
    let fwd = width / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(back);
            let hi = (i + fwd + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

pub fn eda_segment(
    gsr: &SampleBatch,
    baseline: f64,
    cfg: &EdaConfig,
) -> Result<EdaSegmentation, PhysioError> {
    if !(baseline > 0.0) {
        return Err(PhysioError::InvalidBaseline(baseline));
    }
    let ts = &gsr.timestamps;
    let x = &gsr.values;
    if ts.is_empty() {
        return Ok(EdaSegmentation {
            segments: Vec::new(),
            baseline,
        });
    }
    let spacing = median_spacing_ms(ts);
    let rate = spacing.map(|d| 1000.0 / d).unwrap_or(gsr.descriptor.nominal_rate_hz);
    if gsr.descriptor.nominal_rate_hz < 4.0 - 1e-9 || rate < 4.0 * 0.99 {
        return Err(PhysioError::RateTooLow {
            have_hz: rate.min(gsr.descriptor.nominal_rate_hz),
            need_hz: 4.0,
        });
    }
    let dt_ms = spacing.unwrap_or(250.0);
    let n = x.len();
    let states = if n < 2 {
        vec![EdaState::Normal; n]
    } else {
        let width = ((cfg.smoothing_s * 1000.0 / dt_ms).round() as usize).max(1);
        let slope = smoothed_slope(ts, x, width);
        let tol = cfg.epsilon * baseline;
        let min_rise_ms = cfg.min_rise_s * 1000.0;
        let mut states = vec![EdaState::Normal; n];
        let mut cur = EdaState::Normal;
        let mut rise_start: Option<usize> = None;
        for i in 0..n {
            if slope[i] > cfg.theta_rise && cur != EdaState::Arousal {
                let start = *rise_start.get_or_insert(i);
                if (ts[i] - ts[start]) as f64 + dt_ms >= min_rise_ms - 1e-9 {
                    states[start..i].iter_mut().for_each(|s| *s = EdaState::Arousal);
                    cur = EdaState::Arousal;
                    rise_start = None;
                }
            } else {
                rise_start = None;
                cur = match cur {
                    EdaState::Arousal if slope[i] < cfg.theta_flat => EdaState::Peak,
                    EdaState::Peak if slope[i] < -cfg.theta_flat => EdaState::Relax,
                    EdaState::Relax if (x[i] - baseline).abs() <= tol => EdaState::Normal,
                    s => s,
                };
            }
            states[i] = cur;
        }
        states
    };
    let end_of = |i: usize| if i + 1 < n { ts[i + 1] } else { ts[i] + dt_ms.round() as i64 };
    let mut segments: Vec<EdaSegment> = Vec::new();
    for (i, s) in states.iter().enumerate() {
        match segments.last_mut() {
            Some(seg) if seg.state == *s => seg.end_ms = end_of(i),
            _ => segments.push(EdaSegment {
                state: *s,
                start_ms: ts[i],
                end_ms: end_of(i),
            }),
        }
    }
    Ok(EdaSegmentation { segments, baseline })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::chronicle::SubjectId;
    use crate::ingest::Channel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Stimulus response: linear rise, plateau, exponential decay.
    #[derive(Clone, Copy)]
    pub struct Stimulus {
        pub onset_s: f64,
        pub rise_s: f64,
        pub amp: f64,
        pub plateau_s: f64,
        pub tau_s: f64,
    }

    pub fn response(st: &Stimulus, t: f64) -> f64 {
        let t = t - st.onset_s;
        if t <= 0.0 {
            0.0
        } else if t < st.rise_s {
            st.amp * t / st.rise_s
        } else if t < st.rise_s + st.plateau_s {
            st.amp
        } else {
            st.amp * (-(t - st.rise_s - st.plateau_s) / st.tau_s).exp()
        }
    }

    pub fn trace(baseline: f64, stimuli: &[Stimulus], secs: f64) -> SampleBatch {
        let n = (secs * 4.0) as i64;
        let ts: Vec<i64> = (0..n).map(|i| i * 250).collect();
        let vs = ts
            .iter()
            .map(|&t| baseline + stimuli.iter().map(|s| response(s, t as f64 / 1000.0)).sum::<f64>())
            .collect();
        SampleBatch::new(SubjectId::new("t").unwrap(), Channel::Gsr.default_descriptor(), ts, vs)
            .unwrap()
    }

    fn stim(onset_s: f64) -> Stimulus {
        Stimulus {
            onset_s,
            rise_s: 3.0,
            amp: 1.0,
            plateau_s: 2.0,
            tau_s: 3.0,
        }
    }

    #[test]
    fn constant_signal_is_one_normal_segment() {
        let seg = eda_segment(&trace(2.0, &[], 60.0), 2.0, &EdaConfig::default()).unwrap();
        assert_eq!(seg.states(), vec![EdaState::Normal]);
        assert_eq!(seg.segments[0].start_ms, 0);
        assert_eq!(seg.segments[0].end_ms, 60_000);
    }

    #[test]
    fn single_stimulus_full_cycle() {
        let seg = eda_segment(&trace(2.0, &[stim(10.0)], 60.0), 2.0, &EdaConfig::default()).unwrap();
        use EdaState::*;
        assert_eq!(seg.states(), vec![Normal, Arousal, Peak, Relax, Normal]);
        let arousal = seg.segments[1];
        assert!((arousal.start_ms - 10_000).abs() <= 500, "{arousal:?}");
    }

    #[test]
    fn two_stimuli_two_cycles() {
        let seg = eda_segment(
            &trace(2.0, &[stim(10.0), stim(70.0)], 120.0),
            2.0,
            &EdaConfig::default(),
        )
        .unwrap();
        use EdaState::*;
        assert_eq!(
            seg.states(),
            vec![Normal, Arousal, Peak, Relax, Normal, Arousal, Peak, Relax, Normal]
        );
        assert_eq!(seg.cycle_count(), 2);
        assert!(seg.obeys_grammar());
    }

    #[test]
    fn random_trains_tile_and_obey_grammar() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let mut st = Vec::new();
            let mut t = rng.gen_range(0.0..20.0);
            while t < 280.0 {
                st.push(Stimulus {
                    onset_s: t,
                    rise_s: rng.gen_range(0.5..5.0),
                    amp: rng.gen_range(0.05..2.0),
                    plateau_s: rng.gen_range(0.0..4.0),
                    tau_s: rng.gen_range(1.0..10.0),
                });
                t += rng.gen_range(2.0..60.0);
            }
            let base = rng.gen_range(0.5..5.0);
            let b = trace(base, &st, 300.0);
            let seg = eda_segment(&b, base, &EdaConfig::default()).unwrap();
            assert!(seg.obeys_grammar(), "{:?}", seg.states());
            assert_eq!(seg.segments.first().unwrap().start_ms, 0);
            assert_eq!(seg.segments.last().unwrap().end_ms, 300_000);
        }
    }

    #[test]
    fn rejects_slow_rate_and_bad_baseline() {
        let mut b = trace(2.0, &[], 10.0);
        assert!(eda_segment(&b, 0.0, &EdaConfig::default()).is_err());
        b.descriptor.nominal_rate_hz = 1.0;
        assert!(matches!(
            eda_segment(&b, 2.0, &EdaConfig::default()),
            Err(PhysioError::RateTooLow { .. })
        ));
    }
}
