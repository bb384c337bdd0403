//! Ecological momentary assessment: prompt scheduling, response recording and
//! daily mood aggregation.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{NaiveDate, NaiveTime};
use chrono_tz::Tz;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chronicle::SubjectId;
use crate::ingest::{EmaRow, EmaRowKind};
use crate::personal_model::{PromptOutcome, TimingModel};
use crate::time::{self, EpochMs, MINUTE_MS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmaError {
    #[error("cannot fit {k} prompts {sep_min} min apart in a {window_min} min window")]
    WindowTooSmall { k: u32, sep_min: u32, window_min: u32 },
    #[error("response arrived after prompt {0} expired")]
    Expired(String),
    #[error("prompt {0} already has a response")]
    DuplicateResponse(String),
    #[error("unknown prompt {0}")]
    UnknownPrompt(String),
    #[error("invalid response: {0}")]
    InvalidResponse(String),
    #[error("no answered prompts on {date} ({scheduled} scheduled)")]
    NoData { date: NaiveDate, scheduled: usize },
    #[error("invalid waking window: {0}")]
    InvalidWindow(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmaConfig {
    /// Local waking window, `HH:MM`.
    pub window_start: String,
    pub window_end: String,
    pub prompts_per_day: u32,
    pub min_separation_min: u32,
    pub momentary_expiry_min: u32,
    pub end_of_day_expiry_min: u32,
}

impl Default for EmaConfig {
    fn default() -> Self {
        EmaConfig {
            window_start: "09:00".into(),
            window_end: "22:00".into(),
            prompts_per_day: 4,
            min_separation_min: 90,
            momentary_expiry_min: 30,
            end_of_day_expiry_min: 360,
        }
    }
}

impl EmaConfig {
    /// Waking window as minutes after local midnight.
    pub fn window_minutes(&self) -> Result<(u32, u32), EmaError> {
        let parse = |s: &str| {
            NaiveTime::parse_from_str(s, "%H:%M")
                .map(|t| t.signed_duration_since(NaiveTime::MIN).num_minutes() as u32)
                .map_err(|_| EmaError::InvalidWindow(s.to_string()))
        };
        let (a, b) = (parse(&self.window_start)?, parse(&self.window_end)?);
        if b <= a {
            return Err(EmaError::InvalidWindow(format!("{}-{}", self.window_start, self.window_end)));
        }
        Ok((a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Momentary,
    EndOfDay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmaPrompt {
    pub id: String,
    pub subject: SubjectId,
    pub scheduled_at: EpochMs,
    pub kind: PromptKind,
    pub expiry: EpochMs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmaResponse {
    pub prompt_id: String,
    pub answered_at: EpochMs,
    pub positive_affect: u8,
    pub negative_affect: u8,
    #[serde(default)]
    pub free_text: Option<String>,
    /// Weekly open-ended report stored on an end-of-day prompt.
    #[serde(default)]
    pub weekly: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyMood {
    pub date: NaiveDate,
    pub mean_positive: f64,
    pub mean_negative: f64,
    pub response_rate: f64,
    pub answered: usize,
    pub scheduled: usize,
}

/// Momentary prompts are `k` uniform order statistics on the shortened
/// window `[0, W - (k-1)s]`, each shifted by `i * s`; this yields a uniform
/// draw over all separated configurations.
pub fn schedule_prompts(
    subject: &SubjectId,
    date: NaiveDate,
    tz: Tz,
    cfg: &EmaConfig,
    seed: u64,
) -> Result<Vec<EmaPrompt>, EmaError> {
    schedule_with(subject, date, tz, cfg, seed, None)
}

/// Like [`schedule_prompts`] but draws times from a timing model, rejecting
/// draws that violate the separation.
pub fn schedule_prompts_with_model(
    subject: &SubjectId,
    date: NaiveDate,
    tz: Tz,
    cfg: &EmaConfig,
    seed: u64,
    model: &TimingModel,
) -> Result<Vec<EmaPrompt>, EmaError> {
    schedule_with(subject, date, tz, cfg, seed, Some(model))
}

fn schedule_with(
    subject: &SubjectId,
    date: NaiveDate,
    tz: Tz,
    cfg: &EmaConfig,
    seed: u64,
    model: Option<&TimingModel>,
) -> Result<Vec<EmaPrompt>, EmaError> {
    let (start, end) = cfg.window_minutes()?;
    let k = cfg.prompts_per_day;
    let sep = cfg.min_separation_min;
    let window = end - start;
    if k > 0 && (k - 1) * sep > window {
        return Err(EmaError::WindowTooSmall { k, sep_min: sep, window_min: window });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let day_start = time::local_to_epoch(date, NaiveTime::MIN, tz);
    let open = day_start + start as i64 * MINUTE_MS;
    let close = day_start + end as i64 * MINUTE_MS;
    let sep_ms = sep as i64 * MINUTE_MS;

    let mut offsets: Vec<i64> = match model {
        None => {
            let free = (window as i64) * MINUTE_MS - (k as i64 - 1).max(0) * sep_ms;
            let mut u: Vec<i64> = (0..k).map(|_| rng.gen_range(0..=free)).collect();
            u.sort_unstable();
            u.iter().enumerate().map(|(i, x)| x + i as i64 * sep_ms).collect()
        }
        Some(m) => {
            let mut chosen: Vec<i64> = Vec::new();
            let mut attempts = 0;
            while chosen.len() < k as usize {
                attempts += 1;
                if attempts > 10_000 {
                    return schedule_with(subject, date, tz, cfg, seed, None);
                }
                let minute = m.sample_minute(&mut rng, start, end) as i64;
                let off = (minute - start as i64) * MINUTE_MS + rng.gen_range(0..MINUTE_MS);
                let off = off.min(window as i64 * MINUTE_MS);
                if chosen.iter().all(|c| (c - off).abs() >= sep_ms) {
                    chosen.push(off);
                }
            }
            chosen.sort_unstable();
            chosen
        }
    };
    offsets.dedup();
    let stamp = time::format_date(date);
    let mut prompts: Vec<EmaPrompt> = offsets
        .iter()
        .enumerate()
        .map(|(i, off)| {
            let at = open + off;
            EmaPrompt {
                id: format!("{subject}-{stamp}-m{i}"),
                subject: subject.clone(),
                scheduled_at: at,
                kind: PromptKind::Momentary,
                expiry: at + cfg.momentary_expiry_min as i64 * MINUTE_MS,
            }
        })
        .collect();
    prompts.push(EmaPrompt {
        id: format!("{subject}-{stamp}-eod"),
        subject: subject.clone(),
        scheduled_at: close,
        kind: PromptKind::EndOfDay,
        expiry: close + cfg.end_of_day_expiry_min as i64 * MINUTE_MS,
    });
    Ok(prompts)
}

/// Prompts and responses for one subject.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmaLog {
    pub prompts: BTreeMap<String, EmaPrompt>,
    pub responses: BTreeMap<String, EmaResponse>,
    pub missed: BTreeSet<String>,
}

impl EmaLog {
    pub fn add_prompts(&mut self, prompts: impl IntoIterator<Item = EmaPrompt>) {
        for p in prompts {
            self.prompts.insert(p.id.clone(), p);
        }
    }

    pub fn record_response(&mut self, response: EmaResponse) -> Result<&EmaResponse, EmaError> {
        let prompt = self
            .prompts
            .get(&response.prompt_id)
            .ok_or_else(|| EmaError::UnknownPrompt(response.prompt_id.clone()))?;
        if self.responses.contains_key(&response.prompt_id) {
            return Err(EmaError::DuplicateResponse(response.prompt_id.clone()));
        }
        if response.positive_affect > 100 || response.negative_affect > 100 {
            return Err(EmaError::InvalidResponse("affect must be within 0..=100".into()));
        }
        if response.answered_at < prompt.scheduled_at {
            return Err(EmaError::InvalidResponse("answered before the prompt was issued".into()));
        }
        if response.answered_at > prompt.expiry {
            self.missed.insert(response.prompt_id.clone());
            return Err(EmaError::Expired(response.prompt_id));
        }
        let id = response.prompt_id.clone();
        Ok(self.responses.entry(id).or_insert(response))
    }

    fn prompts_on(&self, date: NaiveDate, tz: Tz) -> impl Iterator<Item = &EmaPrompt> {
        self.prompts
            .values()
            .filter(move |p| time::local_date(p.scheduled_at, tz) == date)
    }

    pub fn response_rate(&self, date: NaiveDate, tz: Tz) -> f64 {
        let scheduled: Vec<&EmaPrompt> = self.prompts_on(date, tz).collect();
        if scheduled.is_empty() {
            return 0.0;
        }
        let answered = scheduled.iter().filter(|p| self.responses.contains_key(&p.id)).count();
        answered as f64 / scheduled.len() as f64
    }

    pub fn daily_mood(&self, date: NaiveDate, tz: Tz) -> Result<DailyMood, EmaError> {
        let scheduled: Vec<&EmaPrompt> = self.prompts_on(date, tz).collect();
        let answered: Vec<&EmaResponse> = scheduled
            .iter()
            .filter_map(|p| self.responses.get(&p.id))
            .filter(|r| !r.weekly)
            .collect();
        mood_from(date, scheduled.len(), &answered.iter().map(|r| (r.positive_affect, r.negative_affect)).collect::<Vec<_>>())
    }

    /// Outcomes for the timing model.
    pub fn outcomes(&self) -> Vec<PromptOutcome> {
        self.prompts
            .values()
            .filter(|p| p.kind == PromptKind::Momentary)
            .map(|p| PromptOutcome {
                scheduled_at: p.scheduled_at,
                answered: self.responses.contains_key(&p.id),
            })
            .collect()
    }
}

fn mood_from(date: NaiveDate, scheduled: usize, answers: &[(u8, u8)]) -> Result<DailyMood, EmaError> {
    if answers.is_empty() {
        return Err(EmaError::NoData { date, scheduled });
    }
    let n = answers.len() as f64;
    Ok(DailyMood {
        date,
        mean_positive: answers.iter().map(|a| a.0 as f64).sum::<f64>() / n,
        mean_negative: answers.iter().map(|a| a.1 as f64).sum::<f64>() / n,
        response_rate: if scheduled == 0 { 0.0 } else { answers.len() as f64 / scheduled as f64 },
        answered: answers.len(),
        scheduled,
    })
}

/// Daily mood from ingested `ema.csv` rows. Weekly reports carry free text
/// only and are excluded from both the rate and the means.
pub fn daily_mood_from_rows(rows: &[EmaRow], date: NaiveDate, tz: Tz) -> Result<DailyMood, EmaError> {
    let day: Vec<&EmaRow> = rows
        .iter()
        .filter(|r| r.prompt_kind != EmaRowKind::Weekly && time::local_date(r.ts_ms, tz) == date)
        .collect();
    let answers: Vec<(u8, u8)> = day
        .iter()
        .filter_map(|r| Some((r.positive?, r.negative?)))
        .collect();
    mood_from(date, day.len(), &answers)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sid() -> SubjectId {
        SubjectId::new("p1").unwrap()
    }

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 6).unwrap()
    }

    #[test]
    fn single_prompt_plus_end_of_day() {
        let cfg = EmaConfig { prompts_per_day: 1, ..Default::default() };
        let p = schedule_prompts(&sid(), day(), chrono_tz::UTC, &cfg, 1).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].kind, PromptKind::Momentary);
        assert_eq!(p[1].kind, PromptKind::EndOfDay);
        assert_eq!(time::local(p[1].scheduled_at, chrono_tz::UTC).time(), NaiveTime::from_hms_opt(22, 0, 0).unwrap());
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = EmaConfig::default();
        let a = schedule_prompts(&sid(), day(), chrono_tz::UTC, &cfg, 77).unwrap();
        let b = schedule_prompts(&sid(), day(), chrono_tz::UTC, &cfg, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thousand_seeds_respect_separation_and_window() {
        let cfg = EmaConfig::default();
        let tz: Tz = "America/New_York".parse().unwrap();
        let (open, close) = {
            let s = time::local_to_epoch(day(), NaiveTime::from_hms_opt(9, 0, 0).unwrap(), tz);
            (s, s + 13 * 60 * MINUTE_MS)
        };
        for seed in 0..1000 {
            let p = schedule_prompts(&sid(), day(), tz, &cfg, seed).unwrap();
            let m: Vec<i64> = p.iter().filter(|p| p.kind == PromptKind::Momentary).map(|p| p.scheduled_at).collect();
            assert_eq!(m.len(), 4);
            for i in 0..m.len() {
                assert!(m[i] >= open && m[i] <= close);
                for j in 0..i {
                    assert!((m[i] - m[j]).abs() >= 90 * MINUTE_MS);
                }
            }
        }
    }

    #[test]
    fn window_too_small() {
        let cfg = EmaConfig { prompts_per_day: 10, ..Default::default() };
        assert!(matches!(
            schedule_prompts(&sid(), day(), chrono_tz::UTC, &cfg, 0),
            Err(EmaError::WindowTooSmall { .. })
        ));
    }

    fn log_with_prompts() -> (EmaLog, Vec<EmaPrompt>) {
        let p = schedule_prompts(&sid(), day(), chrono_tz::UTC, &EmaConfig::default(), 9).unwrap();
        let mut log = EmaLog::default();
        log.add_prompts(p.clone());
        (log, p)
    }

    fn resp(p: &EmaPrompt, at: i64, pa: u8, na: u8) -> EmaResponse {
        EmaResponse {
            prompt_id: p.id.clone(),
            answered_at: at,
            positive_affect: pa,
            negative_affect: na,
            free_text: None,
            weekly: false,
        }
    }

    #[test]
    fn record_on_time_late_and_duplicate() {
        let (mut log, p) = log_with_prompts();
        log.record_response(resp(&p[0], p[0].scheduled_at + 60_000, 60, 20)).unwrap();
        assert!((log.response_rate(day(), chrono_tz::UTC) - 0.2).abs() < 1e-12);
        assert!(matches!(
            log.record_response(resp(&p[0], p[0].scheduled_at + 120_000, 60, 20)),
            Err(EmaError::DuplicateResponse(_))
        ));
        assert!(matches!(
            log.record_response(resp(&p[1], p[1].expiry + 1, 60, 20)),
            Err(EmaError::Expired(_))
        ));
        assert!(log.missed.contains(&p[1].id));
        assert!((log.response_rate(day(), chrono_tz::UTC) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mood_means_and_no_data() {
        let (mut log, p) = log_with_prompts();
        assert!(matches!(
            log.daily_mood(day(), chrono_tz::UTC),
            Err(EmaError::NoData { scheduled: 5, .. })
        ));
        assert_eq!(log.response_rate(day(), chrono_tz::UTC), 0.0);
        log.record_response(resp(&p[0], p[0].scheduled_at, 60, 20)).unwrap();
        log.record_response(resp(&p[4], p[4].scheduled_at, 70, 30)).unwrap();
        let m = log.daily_mood(day(), chrono_tz::UTC).unwrap();
        assert_eq!((m.mean_positive, m.mean_negative), (65.0, 25.0));
        assert!((m.response_rate - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rows_aggregate_like_log() {
        let rows = vec![
            EmaRow { ts_ms: 10 * 3_600_000, prompt_kind: EmaRowKind::Momentary, positive: Some(60), negative: Some(20), free_text: None },
            EmaRow { ts_ms: 12 * 3_600_000, prompt_kind: EmaRowKind::Momentary, positive: None, negative: None, free_text: None },
            EmaRow { ts_ms: 22 * 3_600_000, prompt_kind: EmaRowKind::EndOfDay, positive: Some(70), negative: Some(30), free_text: None },
            EmaRow { ts_ms: 22 * 3_600_000 + 1, prompt_kind: EmaRowKind::Weekly, positive: None, negative: None, free_text: Some("ok".into()) },
        ];
        let d = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
        let m = daily_mood_from_rows(&rows, d, chrono_tz::UTC).unwrap();
        assert_eq!((m.mean_positive, m.mean_negative, m.scheduled, m.answered), (65.0, 25.0, 3, 2));
    }
}
