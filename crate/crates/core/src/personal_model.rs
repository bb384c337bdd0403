//! Per-person statistical profile: incremental baselines, context flags,
//! personalized alert thresholds and an EMA timing model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, Timelike};
use chrono_tz::Tz;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::ScreenBand;
use crate::stats::RunningStat;
use crate::time::{self, EpochMs, Timeband};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PersonalError {
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("non-finite value for {0}")]
    NonFinite(String),
    #[error("baseline has fewer than 3 days of history")]
    InsufficientBaseline,
    #[error("need at least {need} days of prompt history, have {have}")]
    InsufficientHistory { have: usize, need: usize },
    #[error("invalid timezone {0:?}")]
    InvalidTimezone(String),
    #[error("rule table line {line}: {reason}")]
    RuleTable { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rmssd,
    LfHf,
    Hr,
    SleepScore,
    Steps,
    HomeMinutes,
    Respiration,
    ArousalFraction,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Rmssd,
        Metric::LfHf,
        Metric::Hr,
        Metric::SleepScore,
        Metric::Steps,
        Metric::HomeMinutes,
        Metric::Respiration,
        Metric::ArousalFraction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Rmssd => "rmssd",
            Metric::LfHf => "lf_hf",
            Metric::Hr => "hr",
            Metric::SleepScore => "sleep_score",
            Metric::Steps => "steps",
            Metric::HomeMinutes => "home_minutes",
            Metric::Respiration => "respiration",
            Metric::ArousalFraction => "arousal_fraction",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = PersonalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| PersonalError::UnknownMetric(s.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricBaseline {
    pub stat: RunningStat,
    /// Distinct local days that contributed.
    pub days: u32,
    pub last_day: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalBaseline {
    pub timezone: String,
    pub metrics: BTreeMap<Metric, MetricBaseline>,
    pub hr_timebands: BTreeMap<Timeband, RunningStat>,
}

impl PersonalBaseline {
    pub fn new(tz: Tz) -> Self {
        PersonalBaseline {
            timezone: tz.name().to_string(),
            metrics: BTreeMap::new(),
            hr_timebands: BTreeMap::new(),
        }
    }

    pub fn tz(&self) -> Tz {
        time::parse_tz(&self.timezone).unwrap_or(chrono_tz::UTC)
    }

    /// Welford update; heart rate also feeds the local timeband bucket.
    pub fn update(&mut self, metric: Metric, value: f64, ts: EpochMs) -> Result<(), PersonalError> {
        if !value.is_finite() {
            return Err(PersonalError::NonFinite(metric.to_string()));
        }
        let tz = self.tz();
        let day = time::local_date(ts, tz);
        let entry = self.metrics.entry(metric).or_default();
        entry.stat.push(value);
        if entry.last_day != Some(day) {
            entry.days += 1;
            entry.last_day = Some(day);
        }
        if metric == Metric::Hr {
            self.hr_timebands
                .entry(Timeband::at(ts, tz))
                .or_default()
                .push(value);
        }
        Ok(())
    }

    pub fn update_named(&mut self, metric: &str, value: f64, ts: EpochMs) -> Result<(), PersonalError> {
        self.update(metric.parse()?, value, ts)
    }

    pub fn get(&self, metric: Metric) -> Option<&MetricBaseline> {
        self.metrics.get(&metric)
    }

    pub fn days(&self, metric: Metric) -> u32 {
        self.get(metric).map_or(0, |m| m.days)
    }

    pub fn mean(&self, metric: Metric) -> Option<f64> {
        self.get(metric).filter(|m| m.stat.count > 0).map(|m| m.stat.mean)
    }

    pub fn std(&self, metric: Metric) -> Option<f64> {
        self.get(metric).filter(|m| m.stat.count > 0).map(|m| m.stat.std())
    }

    /// z-score against the metric's baseline; zero without history.
    pub fn z(&self, metric: Metric, value: f64) -> f64 {
        self.get(metric).map_or(0.0, |m| m.stat.z(value))
    }

    /// Mean heart rate for a local timeband once it has three samples.
    pub fn timeband_hr(&self, band: Timeband) -> Option<f64> {
        self.hr_timebands
            .get(&band)
            .filter(|s| s.count >= 3)
            .map(|s| s.mean)
    }
}

/// Historical and demographic context for one person.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileContext {
    #[serde(default)]
    pub family_bipolar_history: bool,
    #[serde(default)]
    pub cardiac_surgery: bool,
    #[serde(default)]
    pub age_band: Option<String>,
    pub timezone: String,
    #[serde(default)]
    pub risk_notes: String,
}

impl Default for ProfileContext {
    fn default() -> Self {
        ProfileContext {
            family_bipolar_history: false,
            cardiac_surgery: false,
            age_band: None,
            timezone: "UTC".into(),
            risk_notes: String::new(),
        }
    }
}

impl ProfileContext {
    pub fn from_json(text: &str) -> Result<Self, PersonalError> {
        let ctx: ProfileContext = serde_json::from_str(text)
            .map_err(|e| PersonalError::RuleTable { line: e.line(), reason: e.to_string() })?;
        ctx.tz()?;
        Ok(ctx)
    }

    pub fn tz(&self) -> Result<Tz, PersonalError> {
        time::parse_tz(&self.timezone).ok_or_else(|| PersonalError::InvalidTimezone(self.timezone.clone()))
    }

    pub fn flag(&self, name: &str) -> bool {
        match name {
            "family_bipolar_history" => self.family_bipolar_history,
            "cardiac_surgery" => self.cardiac_surgery,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdTarget {
    /// Mean stress z at or above which a window counts toward stress alerts.
    StressAlertZ,
    /// Screen band at which an alert fires; deltas count bands.
    ScreenAlertBand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub flag: String,
    pub target: ThresholdTarget,
    pub delta: f64,
}

/// Context adjustments, loaded from `flag,target_threshold,delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub rules: Vec<Rule>,
}

pub const DEFAULT_RULES_CSV: &str = "flag,target_threshold,delta\n\
cardiac_surgery,stress_alert_z,-0.5\n\
family_bipolar_history,screen_alert_band,-1\n";

impl Default for RuleTable {
    fn default() -> Self {
        RuleTable::from_csv(DEFAULT_RULES_CSV).expect("built-in rule table parses")
    }
}

impl RuleTable {
    /// Rejects any rule that would make an alert less sensitive.
    pub fn from_csv(text: &str) -> Result<Self, PersonalError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let err = |line, reason: String| PersonalError::RuleTable { line, reason };
        let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["flag", "target_threshold", "delta"] {
            return Err(err(1, "expected header flag,target_threshold,delta".into()));
        }
        let mut rules = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| err(line, e.to_string()))?;
            let target = match &rec[1] {
                "stress_alert_z" => ThresholdTarget::StressAlertZ,
                "screen_alert_band" => ThresholdTarget::ScreenAlertBand,
                other => return Err(err(line, format!("unknown target {other:?}"))),
            };
            let delta: f64 = rec[2].parse().map_err(|_| err(line, format!("bad delta {:?}", &rec[2])))?;
            if !delta.is_finite() || delta > 0.0 {
                return Err(err(line, "deltas may only make alerts more sensitive".into()));
            }
            if target == ThresholdTarget::ScreenAlertBand && delta.fract() != 0.0 {
                return Err(err(line, "band deltas must be whole bands".into()));
            }
            rules.push(Rule {
                flag: rec[0].to_string(),
                target,
                delta,
            });
        }
        Ok(RuleTable { rules })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub anchors: BTreeMap<Metric, Anchor>,
    pub stress_alert_z: f64,
    pub screen_alert_band: ScreenBand,
    pub applied_rules: Vec<String>,
}

impl ThresholdSet {
    /// Unadjusted alert thresholds: high stress is `score >= 0.66`, which is
    /// `mean z >= logit(0.66)`; screen alerts fire at the moderate band.
    pub fn default_alerts() -> (f64, ScreenBand) {
        ((0.66f64 / 0.34).ln(), ScreenBand::Moderate)
    }
}

pub fn personalize_thresholds(
    baseline: &PersonalBaseline,
    context: &ProfileContext,
    rules: &RuleTable,
) -> Result<ThresholdSet, PersonalError> {
    let anchors: BTreeMap<Metric, Anchor> = baseline
        .metrics
        .iter()
        .filter(|(_, m)| m.days >= 3)
        .map(|(k, m)| (*k, Anchor { mean: m.stat.mean, std: m.stat.std() }))
        .collect();
    if anchors.is_empty() {
        return Err(PersonalError::InsufficientBaseline);
    }
    let (mut z, mut band) = ThresholdSet::default_alerts();
    let mut applied = Vec::new();
    for rule in &rules.rules {
        if !context.flag(&rule.flag) {
            continue;
        }
        match rule.target {
            ThresholdTarget::StressAlertZ => z += rule.delta,
            ThresholdTarget::ScreenAlertBand => {
                for _ in 0..(-rule.delta) as u32 {
                    band = band.lower();
                }
            }
        }
        applied.push(rule.flag.clone());
    }
    Ok(ThresholdSet {
        anchors,
        stress_alert_z: z,
        screen_alert_band: band,
        applied_rules: applied,
    })
}

/// One prompt and whether it was answered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptOutcome {
    pub scheduled_at: EpochMs,
    pub answered: bool,
}

/// Hour-of-day sampling weights from Laplace-smoothed response rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    pub weights: [f64; 24],
}

pub const MIN_TIMING_DAYS: usize = 14;

pub fn ema_timing_model(history: &[PromptOutcome], tz: Tz) -> Result<TimingModel, PersonalError> {
    let days: BTreeSet<NaiveDate> = history.iter().map(|p| time::local_date(p.scheduled_at, tz)).collect();
    if days.len() < MIN_TIMING_DAYS {
        return Err(PersonalError::InsufficientHistory {
            have: days.len(),
            need: MIN_TIMING_DAYS,
        });
    }
    let mut prompted = [0u32; 24];
    let mut answered = [0u32; 24];
    for p in history {
        let h = time::local_hour(p.scheduled_at, tz) as usize;
        prompted[h] += 1;
        answered[h] += p.answered as u32;
    }
    let mut weights = [0.0; 24];
    for h in 0..24 {
        weights[h] = (answered[h] as f64 + 1.0) / (prompted[h] as f64 + 2.0);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(TimingModel { weights })
}

impl TimingModel {
    pub fn uniform() -> Self {
        TimingModel { weights: [1.0 / 24.0; 24] }
    }

    /// Draws a minute offset within `[start_min, end_min)` of the local day:
    /// an hour by weight (restricted to the window), then a uniform minute.
    pub fn sample_minute<R: Rng>(&self, rng: &mut R, start_min: u32, end_min: u32) -> u32 {
        let mut spans: Vec<(u32, u32, f64)> = Vec::new();
        for h in 0..24u32 {
            let lo = (h * 60).max(start_min);
            let hi = ((h + 1) * 60).min(end_min);
            if hi > lo {
                spans.push((lo, hi, self.weights[h as usize] * (hi - lo) as f64 / 60.0));
            }
        }
        let total: f64 = spans.iter().map(|s| s.2).sum();
        let mut u = rng.gen::<f64>() * total;
        for (lo, hi, w) in &spans {
            if u < *w {
                return rng.gen_range(*lo..*hi);
            }
            u -= w;
        }
        let (lo, hi, _) = spans.last().copied().unwrap_or((start_min, start_min + 1, 0.0));
        rng.gen_range(lo..hi.max(lo + 1))
    }
}

/// Local hour helper used by callers that bucket outcomes.
pub fn hour_of(ts: EpochMs, tz: Tz) -> u32 {
    time::local(ts, tz).hour()
}
