//! Seeded synthetic cohorts with a ground-truth ledger, and an ordered
//! replay feeder over the ingest layout.
//!
//! Each subject-day is generated from its own RNG stream derived from
//! `(seed, subject, day)`, so days can be produced independently and in
//! any order with identical results.

mod day;
mod output;
mod signals;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chronicle::SubjectId;
use crate::ema::EmaConfig;
use crate::estimator::Phase;
use crate::ingest::IngestError;

pub use day::{generate_day, DayTruth, SubjectDay, TruthEvent};
pub use output::{generate, read_ledger, replay, DirectorySink, GroundTruthLedger, SubjectTruth, LEDGER_BEATS, LEDGER_FILE};
pub use signals::{gsr_trace, pulse_train, PulseTrain, Stimulus};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid cohort config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("ledger: {0}")]
    Ledger(String),
    #[error("simkit io: {0}")]
    Io(#[from] std::io::Error),
    #[error("sink rejected batch: {0}")]
    Sink(String),
}

/// One contiguous run of days in a single phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeBlock {
    pub phase: Phase,
    pub start_day: usize,
    pub length: usize,
}

/// Channel parameters for one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub hr_base: f64,
    /// Amplitude of the respiratory IBI modulation, ms.
    pub hrv_depth_ms: f64,
    /// Amplitude of the 0.1 Hz IBI modulation, ms.
    pub lf_depth_ms: f64,
    pub respiration_hz: f64,
    pub sleep_min_mean: f64,
    pub sleep_min_sd: f64,
    pub steps_mean: f64,
    pub steps_sd: f64,
    pub home_min_mean: f64,
    pub home_min_sd: f64,
    pub positive_affect: f64,
    pub negative_affect: f64,
    pub affect_sd: f64,
    pub eda_stimuli_per_hour: f64,
    /// Exercise and an evening out after work.
    pub evening_out: bool,
}

impl PhaseParams {
    pub fn well_being() -> Self {
        PhaseParams {
            hr_base: 62.0,
            hrv_depth_ms: 40.0,
            lf_depth_ms: 20.0,
            respiration_hz: 0.25,
            sleep_min_mean: 450.0,
            sleep_min_sd: 15.0,
            steps_mean: 9000.0,
            steps_sd: 600.0,
            home_min_mean: 800.0,
            home_min_sd: 30.0,
            positive_affect: 65.0,
            negative_affect: 25.0,
            affect_sd: 8.0,
            eda_stimuli_per_hour: 6.0,
            evening_out: true,
        }
    }

    /// Two standard deviations worse on sleep, steps and home time.
    pub fn poor_mood() -> Self {
        PhaseParams {
            hr_base: 66.0,
            hrv_depth_ms: 20.0,
            respiration_hz: 0.28,
            sleep_min_mean: 420.0,
            steps_mean: 7800.0,
            home_min_mean: 860.0,
            positive_affect: 40.0,
            negative_affect: 55.0,
            eda_stimuli_per_hour: 20.0,
            evening_out: false,
            ..Self::well_being()
        }
    }

    fn validate(&self, name: &str) -> Result<(), SimError> {
        let positive = [
            ("hr_base", self.hr_base),
            ("hrv_depth_ms", self.hrv_depth_ms),
            ("respiration_hz", self.respiration_hz),
            ("sleep_min_mean", self.sleep_min_mean),
            ("steps_mean", self.steps_mean),
            ("home_min_mean", self.home_min_mean),
            ("positive_affect", self.positive_affect),
            ("negative_affect", self.negative_affect),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidConfig(format!("{name}.{field} must be positive")));
            }
        }
        let nonneg = [
            self.lf_depth_ms,
            self.sleep_min_sd,
            self.steps_sd,
            self.home_min_sd,
            self.affect_sd,
            self.eda_stimuli_per_hour,
        ];
        if nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(SimError::InvalidConfig(format!("{name}: spreads and rates must be non-negative")));
        }
        if !(40.0..=120.0).contains(&self.hr_base) {
            return Err(SimError::InvalidConfig(format!("{name}.hr_base outside 40..120 bpm")));
        }
        if !(300.0..=475.0).contains(&self.sleep_min_mean) {
            return Err(SimError::InvalidConfig(format!("{name}.sleep_min_mean outside 300..475")));
        }
        if !(600.0..=1000.0).contains(&self.home_min_mean) {
            return Err(SimError::InvalidConfig(format!("{name}.home_min_mean outside 600..1000")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortConfig {
    pub subjects: usize,
    pub days: usize,
    pub seed: u64,
    pub start_date: NaiveDate,
    pub timezone: String,
    pub subject_prefix: String,
    /// Regime plan per subject; empty means every subject stays well.
    pub regimes: Vec<Vec<RegimeBlock>>,
    pub well: PhaseParams,
    pub poor: PhaseParams,
    pub physio_window_s: u32,
    pub physio_interval_s: u32,
    pub ema: EmaConfig,
    pub response_probability: f64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            subjects: 1,
            days: 60,
            seed: 42,
            start_date: NaiveDate::from_ymd_opt(2020, 1, 6).unwrap(),
            timezone: "UTC".into(),
            subject_prefix: "s".into(),
            regimes: Vec::new(),
            well: PhaseParams::well_being(),
            poor: PhaseParams::poor_mood(),
            physio_window_s: 900,
            physio_interval_s: 7200,
            ema: EmaConfig::default(),
            response_probability: 0.85,
        }
    }
}

impl CohortConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let c: CohortConfig = serde_json::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.subjects == 0 || self.days == 0 {
            return bad("subjects and days must be positive".into());
        }
        if crate::time::parse_tz(&self.timezone).is_none() {
            return bad(format!("unknown timezone {:?}", self.timezone));
        }
        SubjectId::new(format!("{}01", self.subject_prefix)).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        if !self.regimes.is_empty() && self.regimes.len() != self.subjects {
            return bad(format!("{} regime plans for {} subjects", self.regimes.len(), self.subjects));
        }
        for (s, plan) in self.regimes.iter().enumerate() {
            let mut blocks = plan.clone();
            blocks.sort_by_key(|b| b.start_day);
            let mut next = 0;
            for b in &blocks {
                if b.length == 0 || b.start_day != next {
                    return bad(format!("regime plan of subject {s} does not tile the days"));
                }
                next += b.length;
            }
            if next != self.days {
                return bad(format!("regime plan of subject {s} covers {next} of {} days", self.days));
            }
        }
        self.well.validate("well")?;
        self.poor.validate("poor")?;
        if self.physio_window_s < 60 || self.physio_interval_s < self.physio_window_s || 86_400 % self.physio_interval_s != 0
        {
            return bad("physio windows must be >= 60 s, fit their interval, and the interval must divide a day".into());
        }
        if !(0.0..=1.0).contains(&self.response_probability) {
            return bad("response_probability must lie in [0, 1]".into());
        }
        self.ema.window_minutes().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    pub fn subject_id(&self, index: usize) -> SubjectId {
        SubjectId::new(format!("{}{:02}", self.subject_prefix, index + 1)).expect("validated prefix")
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start_date + chrono::Duration::days(day as i64)
    }

    pub fn phase(&self, subject: usize, day: usize) -> Phase {
        self.regimes
            .get(subject)
            .and_then(|plan| plan.iter().find(|b| (b.start_day..b.start_day + b.length).contains(&day)))
            .map_or(Phase::WellBeing, |b| b.phase)
    }

    pub fn params(&self, phase: Phase) -> &PhaseParams {
        match phase {
            Phase::WellBeing => &self.well,
            Phase::PoorMood => &self.poor,
        }
    }

    /// Stays well for the whole trace: mild negative affect, baseline sleep and activity.
    pub fn january_like() -> Self {
        CohortConfig { days: 28, ..Default::default() }
    }

    /// Forty well days followed by a planted 20-day poor-mood block.
    pub fn april_like() -> Self {
        CohortConfig {
            days: 60,
            regimes: vec![two_phase(60, 40)],
            ..Default::default()
        }
    }

    /// Five subjects over 60 days, each with one 20-day poor block at a
    /// seeded position.
    pub fn regime_cohort(seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let regimes = (0..5)
            .map(|_| {
                let start = rng.gen_range(10..=30);
                vec![
                    RegimeBlock { phase: Phase::WellBeing, start_day: 0, length: start },
                    RegimeBlock { phase: Phase::PoorMood, start_day: start, length: 20 },
                    RegimeBlock { phase: Phase::WellBeing, start_day: start + 20, length: 40 - start },
                ]
            })
            .collect();
        CohortConfig { subjects: 5, days: 60, seed, regimes, ..Default::default() }
    }

    /// One April-like and one January-like subject side by side.
    pub fn loop_cohort() -> Self {
        CohortConfig {
            subjects: 2,
            days: 60,
            regimes: vec![two_phase(60, 40), vec![RegimeBlock { phase: Phase::WellBeing, start_day: 0, length: 60 }]],
            ..Default::default()
        }
    }

    /// Shorter physio windows; keeps test corpora small while leaving room
    /// for the two-minute frequency analysis.
    pub fn with_short_windows(mut self) -> Self {
        self.physio_window_s = 180;
        self
    }
}

fn two_phase(days: usize, well_days: usize) -> Vec<RegimeBlock> {
    vec![
        RegimeBlock { phase: Phase::WellBeing, start_day: 0, length: well_days },
        RegimeBlock { phase: Phase::PoorMood, start_day: well_days, length: days - well_days },
    ]
}

/// Mixes the cohort seed with a subject and day index into an RNG seed.
pub(crate) fn stream_seed(seed: u64, subject: usize, day: usize, salt: u64) -> u64 {
    let mut z = seed
        ^ (subject as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (day as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ salt.wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
