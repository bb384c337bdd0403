//! Per-subject daily processing: one day of raw batches in; chronicle
//! events, daily features, physio windows, a state estimate and a screen out.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity_fca::{recognize_day, Recognizer};
use crate::chronicle::{ActivityLabel, EventRecord, SubjectId};
use crate::config::Config;
use crate::ema::{daily_mood_from_rows, DailyMood};
use crate::estimator::{
    classify_regions, detect_regime, estimate_state, screen_depression, DailyFeatures, DepressionScreen, RegimePhase,
    StateInputs, StateSpace, StateVector,
};
use crate::ingest::{align_resample, Channel, IngestError, SampleBatch};
use crate::personal_model::{personalize_thresholds, Metric, PersonalBaseline, ProfileContext, RuleTable, ThresholdSet};
use crate::physio::hrv::hrv_features;
use crate::physio::{detect_beats, eda_segment, respiration_rate, stress_score, HrvFeatures, StressAssessment, StressInputs};
use crate::stats::{mean, quantile};
use crate::time::{self, EpochMs, HOUR_MS};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("batch for {subject} does not belong to this pipeline")]
    WrongSubject { subject: String },
    #[error("batch dated {got} arrived after {pending} was opened")]
    LateBatch { got: NaiveDate, pending: NaiveDate },
    #[error("day {0} was already processed")]
    DayAlreadyProcessed(NaiveDate),
    #[error("invalid timezone {0:?}")]
    Timezone(String),
}

/// Physio results for one contiguous PPG window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPhysio {
    pub start_ms: EpochMs,
    pub end_ms: EpochMs,
    pub hrv: Option<HrvFeatures>,
    pub respiration: Option<f64>,
    pub arousal_fraction: Option<f64>,
    pub eda_cycles: Option<usize>,
    /// Scored against the baseline as it stood before this day.
    pub stress: Option<StressAssessment>,
    /// Stress at or above the personalized alert threshold.
    pub high_stress: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayOutcome {
    pub date: NaiveDate,
    pub features: DailyFeatures,
    pub mood: Option<DailyMood>,
    pub windows: Vec<WindowPhysio>,
    pub mean_hr: Option<f64>,
    /// Mean heart rate inside recognized sleep.
    pub resting_hr: Option<f64>,
    pub label_minutes: BTreeMap<ActivityLabel, f64>,
    pub stress_score: Option<f64>,
    pub arousal_fraction: Option<f64>,
    pub state: Option<StateVector>,
    pub regions: Vec<String>,
    pub screen: Option<DepressionScreen>,
}

impl DayOutcome {
    pub fn minutes(&self, label: ActivityLabel) -> f64 {
        self.label_minutes.get(&label).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayResult {
    pub outcome: DayOutcome,
    pub events: Vec<EventRecord>,
}

/// Holds the batches of the day currently arriving. A batch belongs to the
/// local date of its first sample; a later date closes the open day.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DayBuffer {
    pub date: Option<NaiveDate>,
    pub batches: Vec<SampleBatch>,
}

impl DayBuffer {
    pub fn push(
        &mut self,
        batch: SampleBatch,
        tz: Tz,
    ) -> Result<Option<(NaiveDate, Vec<SampleBatch>)>, PipelineError> {
        let Some(first) = batch.first_ts() else { return Ok(None) };
        let date = time::local_date(first, tz);
        match self.date {
            Some(open) if date < open => Err(PipelineError::LateBatch { got: date, pending: open }),
            Some(open) if date == open => {
                self.batches.push(batch);
                Ok(None)
            }
            _ => {
                let closed = self.take();
                self.date = Some(date);
                self.batches.push(batch);
                Ok(closed)
            }
        }
    }

    pub fn take(&mut self) -> Option<(NaiveDate, Vec<SampleBatch>)> {
        let date = self.date.take()?;
        Some((date, std::mem::take(&mut self.batches)))
    }
}

/// Concatenates same-channel batches in time order, dropping repeated timestamps.
fn merged(batches: &[SampleBatch], channel: Channel) -> Result<Option<SampleBatch>, IngestError> {
    let mut parts: Vec<&SampleBatch> = batches.iter().filter(|b| b.channel() == channel && !b.is_empty()).collect();
    match parts.len() {
        0 => return Ok(None),
        1 => return Ok(Some(parts[0].clone())),
        _ => {}
    }
    parts.sort_by_key(|b| b.first_ts());
    let mut out = parts[0].clone();
    for b in &parts[1..] {
        let last = *out.timestamps.last().unwrap_or(&EpochMs::MIN);
        for (i, t) in b.timestamps.iter().enumerate() {
            if *t > last {
                out.timestamps.push(*t);
                out.values.push(b.values[i]);
                if channel == Channel::Ema {
                    out.ema.push(b.ema[i].clone());
                }
            }
        }
    }
    out.validate()?;
    Ok(Some(out))
}

/// Splits a batch wherever consecutive samples are more than `gap_ms` apart.
fn split_at_gaps(b: &SampleBatch, gap_ms: i64) -> Vec<SampleBatch> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=b.timestamps.len() {
        if i == b.timestamps.len() || b.timestamps[i] - b.timestamps[i - 1] > gap_ms {
            out.push(SampleBatch {
                timestamps: b.timestamps[start..i].to_vec(),
                values: b.values[start..i].to_vec(),
                ..empty_like(b)
            });
            start = i;
        }
    }
    out
}

fn empty_like(b: &SampleBatch) -> SampleBatch {
    SampleBatch {
        subject: b.subject.clone(),
        descriptor: b.descriptor.clone(),
        timestamps: Vec::new(),
        values: Vec::new(),
        ema: Vec::new(),
    }
}

fn slice(b: &SampleBatch, from: EpochMs, to: EpochMs) -> SampleBatch {
    let lo = b.timestamps.partition_point(|t| *t < from);
    let hi = b.timestamps.partition_point(|t| *t <= to);
    SampleBatch { timestamps: b.timestamps[lo..hi].to_vec(), values: b.values[lo..hi].to_vec(), ..empty_like(b) }
}

/// Gap that separates two physio windows.
const WINDOW_GAP_MS: i64 = 2_000;
const SLEEP_TARGET_MIN: f64 = 480.0;

/// Incremental state of one subject's processing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectPipeline {
    pub subject: SubjectId,
    pub context: ProfileContext,
    pub baseline: PersonalBaseline,
    pub history: Vec<DayOutcome>,
}

impl SubjectPipeline {
    pub fn new(subject: SubjectId, context: ProfileContext) -> Result<Self, PipelineError> {
        let tz = context.tz().map_err(|_| PipelineError::Timezone(context.timezone.clone()))?;
        Ok(SubjectPipeline { subject, baseline: PersonalBaseline::new(tz), context, history: Vec::new() })
    }

    pub fn tz(&self) -> Tz {
        self.baseline.tz()
    }

    pub fn features(&self) -> Vec<DailyFeatures> {
        self.history.iter().map(|d| d.features.clone()).collect()
    }

    pub fn latest(&self) -> Option<&DayOutcome> {
        self.history.last()
    }

    pub fn latest_state(&self) -> Option<&StateVector> {
        self.history.iter().rev().find_map(|d| d.state.as_ref())
    }

    pub fn latest_screen(&self) -> Option<&DepressionScreen> {
        self.history.iter().rev().find_map(|d| d.screen.as_ref())
    }

    pub fn states(&self) -> Vec<StateVector> {
        self.history.iter().filter_map(|d| d.state.clone()).collect()
    }

    /// Alert thresholds for the current baseline and context.
    pub fn thresholds(&self) -> Option<ThresholdSet> {
        personalize_thresholds(&self.baseline, &self.context, &RuleTable::default()).ok()
    }

    pub fn regimes(&self, cfg: &Config) -> Result<Vec<RegimePhase>, crate::estimator::EstimatorError> {
        detect_regime(&self.features(), &cfg.estimator)
    }

    fn physio_windows(&self, ppg: Option<&SampleBatch>, gsr: Option<&SampleBatch>, cfg: &Config) -> Vec<WindowPhysio> {
        let Some(ppg) = ppg else { return Vec::new() };
        let stress_z = self.thresholds().map_or(ThresholdSet::default_alerts().0, |t| t.stress_alert_z);
        split_at_gaps(ppg, WINDOW_GAP_MS)
            .into_iter()
            .filter(|w| w.len() >= 2)
            .map(|w| {
                let (a, b) = (w.timestamps[0], *w.timestamps.last().unwrap());
                let ibi = detect_beats(&w, &cfg.physio).ok();
                let hrv = ibi.as_ref().and_then(|i| hrv_features(i, [a, b + 1], &cfg.physio).ok());
                let respiration = ibi
                    .as_ref()
                    .and_then(|i| respiration_rate(&w, i, &cfg.physio).ok())
                    .map(|r| r.breaths_per_min);
                let eda = gsr.map(|g| slice(g, a, b)).filter(|g| g.len() >= 8).and_then(|g| {
                    let base = quantile(&g.values, 0.05)?;
                    eda_segment(&g, base, &cfg.physio.eda).ok()
                });
                let inputs = StressInputs {
                    rmssd: hrv.as_ref().map(|h| h.rmssd),
                    lf_hf: hrv.as_ref().and_then(|h| h.lf_hf_ratio),
                    arousal_fraction: eda.as_ref().map(|e| e.arousal_fraction()),
                    respiration,
                };
                let stress = stress_score(&inputs, &self.baseline, &cfg.physio).ok();
                WindowPhysio {
                    start_ms: a,
                    end_ms: b,
                    high_stress: stress.as_ref().is_some_and(|s| s.mean_z >= stress_z),
                    hrv,
                    respiration,
                    arousal_fraction: inputs.arousal_fraction,
                    eda_cycles: eda.as_ref().map(|e| e.cycle_count()),
                    stress,
                }
            })
            .collect()
    }

    /// Processes one local day. Days must arrive in increasing order.
    pub fn process_day(
        &mut self,
        date: NaiveDate,
        batches: &[SampleBatch],
        cfg: &Config,
        rec: &Recognizer,
    ) -> Result<DayResult, PipelineError> {
        if let Some(b) = batches.iter().find(|b| b.subject != self.subject) {
            return Err(PipelineError::WrongSubject { subject: b.subject.to_string() });
        }
        if self.history.last().is_some_and(|d| d.date >= date) {
            return Err(PipelineError::DayAlreadyProcessed(date));
        }
        let tz = self.tz();
        let (from, to) = time::day_bounds(date, tz);
        let get = |c| merged(batches, c);

        // Activities.
        let behavior: Vec<SampleBatch> = [Channel::AccelMag, Channel::Hr, Channel::GpsClass, Channel::ScreenOn]
            .into_iter()
            .map(get)
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        let (recognition, coverage) = if behavior.is_empty() {
            (None, 0.0)
        } else {
            let frame = align_resample(&behavior, cfg.ingest.period_ms, &cfg.ingest)?;
            let cov = 1.0 - frame.masked_fraction(Channel::AccelMag).unwrap_or(1.0);
            let day = recognize_day(&self.subject, &frame.rows(), date, tz, rec);
            (Some(day), cov)
        };
        let mut label_minutes = BTreeMap::new();
        if let Some(r) = &recognition {
            for e in &r.events {
                *label_minutes.entry(e.label).or_insert(0.0) += e.clipped_ms(from, to) as f64 / 60_000.0;
            }
        }
        let has_gps = behavior.iter().any(|b| b.channel() == Channel::GpsClass);
        let minutes = |l| label_minutes.get(&l).copied().unwrap_or(0.0);

        // Physio.
        let ppg = get(Channel::Ppg)?;
        let gsr = get(Channel::Gsr)?;
        let windows = self.physio_windows(ppg.as_ref(), gsr.as_ref(), cfg);
        let avg = |f: &dyn Fn(&WindowPhysio) -> Option<f64>| mean(&windows.iter().filter_map(f).collect::<Vec<_>>());
        let rmssd = avg(&|w| w.hrv.as_ref().map(|h| h.rmssd));
        let lf_hf = avg(&|w| w.hrv.as_ref().and_then(|h| h.lf_hf_ratio));
        let respiration = avg(&|w| w.respiration);
        let arousal = avg(&|w| w.arousal_fraction);
        let stress = avg(&|w| w.stress.as_ref().map(|s| s.score));

        let hr = get(Channel::Hr)?;
        let mean_hr = hr.as_ref().and_then(|h| mean(&h.values));
        let resting_hr = hr.as_ref().zip(recognition.as_ref()).and_then(|(h, r)| {
            let asleep: Vec<f64> = h
                .timestamps
                .iter()
                .zip(&h.values)
                .filter(|(t, _)| {
                    r.events.iter().any(|e| e.label == ActivityLabel::Sleeping && e.start_ms <= **t && **t < e.end_ms)
                })
                .map(|(_, v)| *v)
                .collect();
            mean(&asleep)
        });
        let steps = get(Channel::Steps)?.map(|s| s.values.iter().sum::<f64>());
        let mood = get(Channel::Ema)?.and_then(|e| daily_mood_from_rows(&e.ema, date, tz).ok());

        let features = DailyFeatures {
            date: Some(date),
            mean_positive: mood.as_ref().map(|m| m.mean_positive),
            mean_negative: mood.as_ref().map(|m| m.mean_negative),
            sleep_score: recognition
                .as_ref()
                .map(|_| (100.0 * minutes(ActivityLabel::Sleeping) / SLEEP_TARGET_MIN).clamp(0.0, 100.0)),
            steps,
            home_minutes: has_gps.then(|| minutes(ActivityLabel::HomeEvent)),
            rmssd,
            lf_hf,
            respiration,
            communication_minutes: recognition.as_ref().map(|_| {
                minutes(ActivityLabel::DirectCommunication) + minutes(ActivityLabel::RemoteCommunication)
            }),
        };

        // The day's values join the baseline after its windows were scored.
        let noon = from + 12 * HOUR_MS;
        let updates = [
            (Metric::SleepScore, features.sleep_score),
            (Metric::Steps, features.steps),
            (Metric::HomeMinutes, features.home_minutes),
        ];
        for (m, v) in updates {
            if let Some(v) = v {
                let _ = self.baseline.update(m, v, noon);
            }
        }
        // Physio anchors are window-level so window scores use the right spread.
        for w in &windows {
            let vals = [
                (Metric::Rmssd, w.hrv.as_ref().map(|h| h.rmssd)),
                (Metric::LfHf, w.hrv.as_ref().and_then(|h| h.lf_hf_ratio)),
                (Metric::Respiration, w.respiration),
                (Metric::ArousalFraction, w.arousal_fraction),
            ];
            for (m, v) in vals {
                if let Some(v) = v {
                    let _ = self.baseline.update(m, v, w.start_ms);
                }
            }
        }
        if let Some(h) = &hr {
            for hour in 0..24 {
                let part = slice(h, from + hour * HOUR_MS, from + (hour + 1) * HOUR_MS - 1);
                if let Some(m) = mean(&part.values) {
                    let _ = self.baseline.update(Metric::Hr, m, from + hour * HOUR_MS);
                }
            }
        }

        let mut recent_steps: Vec<f64> = self
            .history
            .iter()
            .rev()
            .take(cfg.estimator.activity_history_days.saturating_sub(1))
            .filter_map(|d| d.features.steps)
            .collect();
        recent_steps.extend(steps);
        let inputs = StateInputs {
            timestamp: noon,
            mean_positive: features.mean_positive,
            mean_negative: features.mean_negative,
            mood_coverage: mood.as_ref().map_or(0.0, |m| m.response_rate),
            lf_hf,
            stress_score: stress,
            physio_coverage: if windows.is_empty() {
                0.0
            } else {
                windows.iter().filter(|w| w.hrv.is_some()).count() as f64 / windows.len() as f64
            },
            steps,
            steps_reference: quantile(&recent_steps, cfg.estimator.activity_percentile),
            home_minutes: features.home_minutes,
            communication_minutes: features.communication_minutes,
            behavior_coverage: coverage,
        };
        let state = estimate_state(&inputs, &self.baseline, &cfg.estimator).ok();
        let space = StateSpace::production_5d();
        let regions = state.as_ref().and_then(|s| classify_regions(s, &space).ok()).unwrap_or_default();

        let mut window: Vec<DailyFeatures> = self.features();
        window.push(features.clone());
        let screen = screen_depression(&window, &self.baseline, &cfg.estimator).ok();

        let outcome = DayOutcome {
            date,
            features,
            mood,
            windows,
            mean_hr,
            resting_hr,
            label_minutes,
            stress_score: stress,
            arousal_fraction: arousal,
            state,
            regions,
            screen,
        };
        self.history.push(outcome.clone());
        Ok(DayResult { outcome, events: recognition.map(|r| r.events).unwrap_or_default() })
    }
}

/// Runs one simulated subject through the pipeline in memory.
pub fn simulate_subject(
    cohort: &crate::simkit::CohortConfig,
    subject_index: usize,
    cfg: &Config,
    rec: &Recognizer,
) -> Result<(SubjectPipeline, Vec<crate::simkit::DayTruth>), Box<dyn std::error::Error + Send + Sync>> {
    let context = ProfileContext { timezone: cohort.timezone.clone(), ..Default::default() };
    let mut p = SubjectPipeline::new(cohort.subject_id(subject_index), context)?;
    let mut truth = Vec::with_capacity(cohort.days);
    for d in 0..cohort.days {
        let day = crate::simkit::generate_day(cohort, subject_index, d)?;
        p.process_day(day.truth.date, &day.batches, cfg, rec)?;
        truth.push(day.truth);
    }
    Ok((p, truth))
}
