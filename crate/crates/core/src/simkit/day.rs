//! One simulated subject-day: the activity schedule, every raw stream, and
//! the matching ground truth.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::signals::{gsr_trace, pulse_train};
use super::{stream_seed, CohortConfig, PhaseParams, SimError};
use crate::chronicle::{ActivityLabel, SubjectId};
use crate::estimator::Phase;
use crate::ingest::{Channel, EmaRow, EmaRowKind, LocationClass, SampleBatch};
use crate::physio::hrv::rmssd;
use crate::time::{self, EpochMs, MINUTE_MS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEvent {
    pub label: ActivityLabel,
    pub start_ms: EpochMs,
    pub end_ms: EpochMs,
}

impl TruthEvent {
    pub fn minutes(&self) -> f64 {
        (self.end_ms - self.start_ms) as f64 / MINUTE_MS as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayTruth {
    pub date: NaiveDate,
    pub day_index: usize,
    pub phase: Phase,
    pub sleep_minutes: u32,
    pub steps: u64,
    pub home_minutes: u32,
    /// Back-to-back activities covering the whole day.
    pub events: Vec<TruthEvent>,
    /// Contiguous stays at home.
    pub home: Vec<TruthEvent>,
    pub meals: Vec<TruthEvent>,
    pub mean_positive: Option<f64>,
    pub mean_negative: Option<f64>,
    pub answered: usize,
    pub scheduled: usize,
    pub physio_windows: Vec<[EpochMs; 2]>,
    /// Mean per-window RMSSD of the true beats.
    pub rmssd: Option<f64>,
    /// True beat times, kept out of the JSON ledger.
    #[serde(skip)]
    pub beats: Vec<f64>,
}

impl DayTruth {
    pub fn minutes(&self, label: ActivityLabel) -> f64 {
        let list = if label == ActivityLabel::HomeEvent { &self.home } else { &self.events };
        list.iter().filter(|e| e.label == label).map(TruthEvent::minutes).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectDay {
    pub subject: SubjectId,
    pub truth: DayTruth,
    /// One batch per channel, in channel order.
    pub batches: Vec<SampleBatch>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Move {
    Still,
    Light,
    Walk,
    Run,
}

impl Move {
    fn accel_sd(self) -> f64 {
        match self {
            Move::Still => 0.01,
            Move::Light => 0.12,
            Move::Walk => 0.15,
            Move::Run => 0.6,
        }
    }

    fn step_weight(self) -> f64 {
        match self {
            Move::Still => 0.0,
            Move::Light => 0.3,
            Move::Walk => 1.0,
            Move::Run => 1.6,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Seg {
    start: u32,
    end: u32,
    label: ActivityLabel,
    motion: Move,
    loc: LocationClass,
    hr: f64,
}

const POSTPRANDIAL_BPM: f64 = 12.0;
const POSTPRANDIAL_MIN: u32 = 45;

fn round5(x: f64) -> u32 {
    ((x / 5.0).round() * 5.0).max(0.0) as u32
}

fn draw(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    if sd > 0.0 {
        Normal::new(mean, sd).unwrap().sample(rng)
    } else {
        mean
    }
}

/// Minute-level schedule. `home` is the target time at home; the end of
/// the workday absorbs it.
fn schedule(p: &PhaseParams, rng: &mut ChaCha8Rng) -> Vec<Seg> {
    use ActivityLabel::*;
    use LocationClass::*;
    let wake = round5(draw(rng, p.sleep_min_mean, p.sleep_min_sd).clamp(
        p.sleep_min_mean - 3.0 * p.sleep_min_sd,
        (p.sleep_min_mean + 3.0 * p.sleep_min_sd).min(475.0),
    ));
    let home = draw(rng, p.home_min_mean, p.home_min_sd)
        .clamp(p.home_min_mean - 3.0 * p.home_min_sd, p.home_min_mean + 3.0 * p.home_min_sd);
    let dinner_earliest = 1140 + round5(rng.gen_range(0.0..30.0));
    let outing = if p.evening_out { 110 } else { 20 };
    // Morning at home is wake + 40 minutes; the rest of home time follows arrival.
    let arrive_min = 1440 + wake + 40;
    let earliest = (wake + 360).max(800) + outing;
    let arrival = round5((arrive_min as f64 - home).clamp(earliest as f64, 1300.0));
    let work_end = arrival - outing;
    let prep = dinner_earliest.max(arrival + 10);

    let seg = |start, end, label, motion, loc, hr| Seg { start, end, label, motion, loc, hr };
    let mut s = vec![
        seg(0, wake, Sleeping, Move::Still, Home, -8.0),
        seg(wake, wake + 10, PreparingFood, Move::Light, Home, 3.0),
        seg(wake + 10, wake + 40, Eating, Move::Still, Home, 0.0),
        seg(wake + 40, wake + 60, Commuting, Move::Walk, Transit, 25.0),
        seg(wake + 60, 720, Working, Move::Still, Work, 0.0),
        seg(720, 760, Eating, Move::Still, Restaurant, 0.0),
        seg(760, work_end, Working, Move::Still, Work, 0.0),
        seg(work_end, work_end + 20, Commuting, Move::Walk, Transit, 25.0),
    ];
    if p.evening_out {
        s.push(seg(work_end + 20, work_end + 50, Exercising, Move::Run, Outdoor, 60.0));
        s.push(seg(work_end + 50, work_end + 110, Socializing, Move::Still, SocialVenue, 3.0));
    }
    // A short sit before dinner reads as television, a long one as relaxing.
    let sit = if prep - arrival < 45 { WatchingTv } else { Relaxing };
    s.push(seg(arrival, prep, sit, Move::Still, Home, 0.0));
    s.push(seg(prep, prep + 15, PreparingFood, Move::Light, Home, 3.0));
    s.push(seg(prep + 15, prep + 45, Eating, Move::Still, Home, 0.0));
    s.push(seg(prep + 45, 1440, Relaxing, Move::Still, Home, 0.0));
    s
}

pub fn generate_day(cfg: &CohortConfig, subject_index: usize, day_index: usize) -> Result<SubjectDay, SimError> {
    let tz = time::parse_tz(&cfg.timezone).ok_or_else(|| SimError::InvalidConfig(cfg.timezone.clone()))?;
    let subject = cfg.subject_id(subject_index);
    let date = cfg.date(day_index);
    let phase = cfg.phase(subject_index, day_index);
    let p = cfg.params(phase);
    let (day_start, _) = time::day_bounds(date, tz);
    let at = |m: u32| day_start + m as i64 * MINUTE_MS;
    let rng = |salt| ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, subject_index, day_index, salt));

    let mut sched_rng = rng(1);
    let segs = schedule(p, &mut sched_rng);
    let mut minute_seg = vec![0usize; 1440];
    for (k, s) in segs.iter().enumerate() {
        for m in s.start..s.end {
            minute_seg[m as usize] = k;
        }
    }
    let meals: Vec<&Seg> = segs.iter().filter(|s| s.label == ActivityLabel::Eating).collect();

    // Heart rate, one sample per minute.
    let mut hr_rng = rng(2);
    let hr_noise = Normal::new(0.0, 1.0).unwrap();
    let hr: Vec<f64> = (0..1440u32)
        .map(|m| {
            let s = &segs[minute_seg[m as usize]];
            let fed = meals.iter().any(|e| m >= e.start && m < e.start + POSTPRANDIAL_MIN);
            let v = p.hr_base + s.hr + if fed { POSTPRANDIAL_BPM } else { 0.0 } + hr_noise.sample(&mut hr_rng);
            (v * 10.0).round() / 10.0
        })
        .collect();
    let hr_fn = |t: f64| {
        let x = ((t - day_start as f64) / MINUTE_MS as f64).clamp(0.0, 1439.0);
        let i = x.floor() as usize;
        let j = (i + 1).min(1439);
        hr[i] + (hr[j] - hr[i]) * (x - i as f64)
    };

    // Accelerometer magnitude every 10 s.
    let mut acc_rng = rng(3);
    let accel_ts: Vec<EpochMs> = (0..8640).map(|k| day_start + k * 10_000).collect();
    let accel: Vec<f64> = (0..8640usize)
        .map(|k| {
            let sd = segs[minute_seg[k / 6]].motion.accel_sd();
            let v = 1.0 + Normal::new(0.0, sd).unwrap().sample(&mut acc_rng);
            (v * 10_000.0).round() / 10_000.0
        })
        .collect();

    // Location and screen state every minute; the phone comes out on some commutes.
    let mut phone_rng = rng(4);
    let phone_seg: Vec<bool> = segs
        .iter()
        .map(|s| s.label == ActivityLabel::Commuting && phone_rng.gen_bool(0.5))
        .collect();
    let minutes_ts: Vec<EpochMs> = (0..1440).map(at).collect();
    let gps: Vec<f64> = (0..1440).map(|m| segs[minute_seg[m]].loc.code()).collect();
    let screen: Vec<f64> = (0..1440).map(|m| if phone_seg[minute_seg[m]] { 1.0 } else { 0.0 }).collect();

    // Step counts in 15-minute buckets proportional to movement.
    let mut step_rng = rng(5);
    let target = draw(&mut step_rng, p.steps_mean, p.steps_sd).max(0.0);
    let weights: Vec<f64> = (0..1440).map(|m| segs[minute_seg[m]].motion.step_weight()).collect();
    let total_w: f64 = weights.iter().sum();
    let step_ts: Vec<EpochMs> = (0..96).map(|b| at(b * 15)).collect();
    let steps: Vec<f64> = (0..96usize)
        .map(|b| {
            let w: f64 = weights[b * 15..(b + 1) * 15].iter().sum();
            if total_w > 0.0 { (target * w / total_w).round() } else { 0.0 }
        })
        .collect();

    // Physio windows.
    let mut ppg_rng = rng(6);
    let mut gsr_rng = rng(7);
    let gsr_base = 2.0 + gsr_rng.gen_range(-0.1..0.1);
    let mut ppg_ts = Vec::new();
    let mut ppg_v = Vec::new();
    let mut gsr_ts = Vec::new();
    let mut gsr_v = Vec::new();
    let mut beats = Vec::new();
    let mut windows = Vec::new();
    let mut window_rmssd = Vec::new();
    for w in 0..(86_400 / cfg.physio_interval_s) {
        let start = day_start + (w * cfg.physio_interval_s) as i64 * 1000;
        let train = pulse_train(
            &mut ppg_rng,
            start,
            cfg.physio_window_s,
            &hr_fn,
            p.hrv_depth_ms,
            p.lf_depth_ms,
            p.respiration_hz,
            true,
        );
        let ibis: Vec<f64> = train.beats.windows(2).map(|b| b[1] - b[0]).collect();
        window_rmssd.extend(rmssd(&ibis));
        windows.push([start, start + cfg.physio_window_s as i64 * 1000]);
        ppg_ts.extend(train.timestamps);
        ppg_v.extend(train.values);
        beats.extend(train.beats);
        let (t, v, _) = gsr_trace(&mut gsr_rng, start, cfg.physio_window_s, gsr_base, p.eda_stimuli_per_hour);
        gsr_ts.extend(t);
        gsr_v.extend(v);
    }

    // Self reports.
    let mut ema_rng = rng(8);
    let prompts = crate::ema::schedule_prompts(
        &subject,
        date,
        tz,
        &cfg.ema,
        stream_seed(cfg.seed, subject_index, day_index, 9),
    )
    .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let mut rows = Vec::new();
    let (mut pa_sum, mut na_sum) = (0.0, 0.0);
    let affect = |rng: &mut ChaCha8Rng, mean: f64| draw(rng, mean, p.affect_sd).round().clamp(0.0, 100.0) as u8;
    for pr in &prompts {
        let kind = match pr.kind {
            crate::ema::PromptKind::Momentary => EmaRowKind::Momentary,
            crate::ema::PromptKind::EndOfDay => EmaRowKind::EndOfDay,
        };
        if ema_rng.gen_bool(cfg.response_probability) {
            let delay = match kind {
                EmaRowKind::EndOfDay => ema_rng.gen_range(1..60),
                _ => ema_rng.gen_range(1..20),
            };
            let (pa, na) = (affect(&mut ema_rng, p.positive_affect), affect(&mut ema_rng, p.negative_affect));
            pa_sum += pa as f64;
            na_sum += na as f64;
            rows.push(EmaRow {
                ts_ms: pr.scheduled_at + delay * MINUTE_MS,
                prompt_kind: kind,
                positive: Some(pa),
                negative: Some(na),
                free_text: None,
            });
        } else {
            rows.push(EmaRow { ts_ms: pr.scheduled_at, prompt_kind: kind, positive: None, negative: None, free_text: None });
        }
    }
    let answered = rows.iter().filter(|r| r.answered()).count();
    let scheduled = rows.len();
    if day_index % 7 == 6 {
        let text = match phase {
            Phase::WellBeing => "good week, busy at work and out with friends",
            Phase::PoorMood => "tired most days and stayed in",
        };
        rows.push(EmaRow {
            ts_ms: at(22 * 60 + 5),
            prompt_kind: EmaRowKind::Weekly,
            positive: None,
            negative: None,
            free_text: Some(text.into()),
        });
    }
    rows.sort_by_key(|r| r.ts_ms);
    for i in 1..rows.len() {
        if rows[i].ts_ms <= rows[i - 1].ts_ms {
            rows[i].ts_ms = rows[i - 1].ts_ms + 1;
        }
    }

    let batch = |ch: Channel, ts: Vec<EpochMs>, vs: Vec<f64>| SampleBatch::new(subject.clone(), ch.default_descriptor(), ts, vs);
    let batches = vec![
        batch(Channel::Ppg, ppg_ts, ppg_v)?,
        batch(Channel::Gsr, gsr_ts, gsr_v)?,
        batch(Channel::AccelMag, accel_ts, accel)?,
        batch(Channel::Hr, minutes_ts.clone(), hr.clone())?,
        batch(Channel::Steps, step_ts, steps.clone())?,
        batch(Channel::GpsClass, minutes_ts.clone(), gps)?,
        batch(Channel::ScreenOn, minutes_ts, screen)?,
        SampleBatch::from_ema_rows(subject.clone(), rows)?,
    ];

    let event = |s: &Seg| TruthEvent { label: s.label, start_ms: at(s.start), end_ms: at(s.end) };
    let mut home: Vec<TruthEvent> = Vec::new();
    for s in segs.iter().filter(|s| s.loc == LocationClass::Home) {
        match home.last_mut() {
            Some(h) if h.end_ms == at(s.start) => h.end_ms = at(s.end),
            _ => home.push(TruthEvent { label: ActivityLabel::HomeEvent, ..event(s) }),
        }
    }
    let truth = DayTruth {
        date,
        day_index,
        phase,
        sleep_minutes: segs[0].end,
        steps: steps.iter().sum::<f64>() as u64,
        home_minutes: home.iter().map(|h| h.minutes() as u32).sum(),
        events: segs.iter().map(event).collect(),
        home,
        meals: meals.iter().map(|s| event(s)).collect(),
        mean_positive: (answered > 0).then(|| pa_sum / answered as f64),
        mean_negative: (answered > 0).then(|| na_sum / answered as f64),
        answered,
        scheduled,
        physio_windows: windows,
        rmssd: crate::stats::mean(&window_rmssd),
        beats,
    };
    Ok(SubjectDay { subject, truth, batches })
}
