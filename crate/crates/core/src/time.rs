//! Epoch-millisecond helpers and local timebands.

use chrono::{DateTime, Datelike, NaiveDate, NaiveTime, TimeZone, Timelike, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

/// Milliseconds since the Unix epoch, UTC.
pub type EpochMs = i64;

pub const MINUTE_MS: i64 = 60_000;
pub const HOUR_MS: i64 = 60 * MINUTE_MS;
pub const DAY_MS: i64 = 24 * HOUR_MS;
pub const WEEK_MS: i64 = 7 * DAY_MS;

/// Coarse local time-of-day bucket used for HR baselines and activity context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timeband {
    Morning,
    Afternoon,
    Evening,
    Night,
}

impl Timeband {
    pub const ALL: [Timeband; 4] = [
        Timeband::Morning,
        Timeband::Afternoon,
        Timeband::Evening,
        Timeband::Night,
    ];

    /// Morning 05–12, afternoon 12–17, evening 17–22, night 22–05 (local hours).
    pub fn from_hour(hour: u32) -> Self {
        match hour {
            5..=11 => Timeband::Morning,
            12..=16 => Timeband::Afternoon,
            17..=21 => Timeband::Evening,
            _ => Timeband::Night,
        }
    }

    pub fn at(ts: EpochMs, tz: Tz) -> Self {
        Self::from_hour(local(ts, tz).hour())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Timeband::Morning => "morning",
            Timeband::Afternoon => "afternoon",
            Timeband::Evening => "evening",
            Timeband::Night => "night",
        }
    }
}

pub fn utc(ts: EpochMs) -> DateTime<Utc> {
    Utc.timestamp_millis_opt(ts).single().unwrap_or_default()
}

pub fn local(ts: EpochMs, tz: Tz) -> DateTime<Tz> {
    utc(ts).with_timezone(&tz)
}

pub fn local_date(ts: EpochMs, tz: Tz) -> NaiveDate {
    local(ts, tz).date_naive()
}

/// Local hour of day in `[0, 24)`.
pub fn local_hour(ts: EpochMs, tz: Tz) -> u32 {
    local(ts, tz).hour()
}

/// Epoch milliseconds of a local wall-clock time. Ambiguous times resolve to
/// the earlier instant; skipped (DST gap) times move forward by one hour.
pub fn local_to_epoch(date: NaiveDate, time: NaiveTime, tz: Tz) -> EpochMs {
    let naive = date.and_time(time);
    match tz.from_local_datetime(&naive) {
        chrono::LocalResult::Single(t) => t.timestamp_millis(),
        chrono::LocalResult::Ambiguous(a, _) => a.timestamp_millis(),
        chrono::LocalResult::None => {
            let shifted = naive + chrono::Duration::hours(1);
            tz.from_local_datetime(&shifted)
                .earliest()
                .map(|t| t.timestamp_millis())
                .unwrap_or_else(|| shifted.and_utc().timestamp_millis())
        }
    }
}

/// `[start, end)` of a local calendar day in epoch milliseconds.
pub fn day_bounds(date: NaiveDate, tz: Tz) -> (EpochMs, EpochMs) {
    let start = local_to_epoch(date, NaiveTime::MIN, tz);
    let next = date.succ_opt().unwrap_or(date);
    let end = local_to_epoch(next, NaiveTime::MIN, tz);
    (start, end)
}

/// Parses an IANA timezone name.
pub fn parse_tz(name: &str) -> Option<Tz> {
    name.parse::<Tz>().ok()
}

pub fn format_date(date: NaiveDate) -> String {
    format!("{:04}-{:02}-{:02}", date.year(), date.month(), date.day())
}
