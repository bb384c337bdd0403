//! The per-subject life-event chronicle.
//!
//! Events are stored append-only, one JSON object per line per subject, with a
//! small snapshot index mapping each UTC day to the byte offsets of the events
//! starting on that day. Same-label overlaps are rejected; different labels may
//! overlap (walking while on the smartphone).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ingest::FrameRow;
use crate::time::{self, EpochMs, DAY_MS, MINUTE_MS};

#[derive(Debug, Error)]
pub enum ChronicleError {
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("overlapping {label} event for {subject}: [{start_ms}, {end_ms}) intersects seq {existing_seq}")]
    OverlapConflict {
        subject: SubjectId,
        label: ActivityLabel,
        start_ms: EpochMs,
        end_ms: EpochMs,
        existing_seq: u64,
    },
    #[error("unknown subject {0}")]
    UnknownSubject(String),
    #[error("invalid window: from {from} must be before to {to}")]
    InvalidWindow { from: EpochMs, to: EpochMs },
    #[error("frames are not time-sorted at index {0}")]
    UnsortedInput(usize),
    #[error("granularity must be 1 or 5 minutes, got {0}")]
    InvalidGranularity(u32),
    #[error("invalid subject id {0:?}")]
    InvalidSubjectId(String),
    #[error("chronicle io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt chronicle line {line} in {path}: {reason}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

/// Opaque subject identifier: 1–64 characters of `[A-Za-z0-9_-]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct SubjectId(String);

impl SubjectId {
    pub fn new(id: impl Into<String>) -> Result<Self, ChronicleError> {
        let id = id.into();
        let valid = (1..=64).contains(&id.len())
            && id
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
        if valid {
            Ok(SubjectId(id))
        } else {
            Err(ChronicleError::InvalidSubjectId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for SubjectId {
    type Err = ChronicleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SubjectId::new(s)
    }
}

impl<'de> Deserialize<'de> for SubjectId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SubjectId::new(s).map_err(serde::de::Error::custom)
    }
}

macro_rules! activity_labels {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Daily-activity taxonomy (24 activities) plus `Unknown`.
        ///
        /// Declaration order is the fixed tie-break order used by the recognizer.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum ActivityLabel { $($variant),* }

        impl ActivityLabel {
            pub const ALL: &'static [ActivityLabel] = &[$(ActivityLabel::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self { $(ActivityLabel::$variant => $name),* }
            }
        }
    };
}

activity_labels! {
    Still => "Still",
    Walking => "Walking",
    Running => "Running",
    Cycling => "Cycling",
    Driving => "Driving",
    DirectCommunication => "Direct communication",
    RemoteCommunication => "Remote communication",
    OnTheSmartphone => "On the smartphone",
    Working => "Working",
    Commuting => "Commuting",
    Exercising => "Exercising",
    ReligiousEvent => "Religious event",
    Shopping => "Shopping",
    Eating => "Eating",
    UsingToilet => "Using toilet",
    HomeEvent => "Home event",
    WatchingTv => "Watching TV",
    PreparingFood => "Preparing food",
    Socializing => "Socializing",
    Housework => "Housework",
    IntimateRelations => "Intimate relations",
    Relaxing => "Relaxing",
    TakingABreak => "Taking a break",
    Sleeping => "Sleeping",
    Unknown => "Unknown",
}

impl ActivityLabel {
    /// Position in the fixed enumeration order.
    pub fn order(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActivityLabel {
    type Err = String;

    /// Case-insensitive; `_` and `-` are accepted in place of spaces.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = |x: &str| x.to_ascii_lowercase().replace(['_', '-'], " ");
        let wanted = norm(s.trim());
        ActivityLabel::ALL
            .iter()
            .copied()
            .find(|l| norm(l.as_str()) == wanted)
            .ok_or_else(|| format!("unknown activity label {s:?}"))
    }
}

impl Serialize for ActivityLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ActivityLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSource {
    Rule,
    Fca,
    Manual,
    Synthetic,
}

/// One labeled life event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub subject: SubjectId,
    pub label: ActivityLabel,
    pub start_ms: EpochMs,
    pub end_ms: EpochMs,
    #[serde(default)]
    pub attributes: BTreeSet<String>,
    pub source: EventSource,
    pub confidence: f64,
}

impl EventRecord {
    pub fn new(
        subject: SubjectId,
        label: ActivityLabel,
        start_ms: EpochMs,
        end_ms: EpochMs,
        source: EventSource,
    ) -> Self {
        EventRecord {
            subject,
            label,
            start_ms,
            end_ms,
            attributes: BTreeSet::new(),
            source,
            confidence: 1.0,
        }
    }

    pub fn with_attributes<I, S>(mut self, attrs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.attributes.extend(attrs.into_iter().map(Into::into));
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn validate(&self) -> Result<(), ChronicleError> {
        if self.end_ms <= self.start_ms {
            return Err(ChronicleError::InvalidEvent(format!(
                "end {} must be after start {}",
                self.end_ms, self.start_ms
            )));
        }
        if self.end_ms - self.start_ms > DAY_MS {
            return Err(ChronicleError::InvalidEvent(
                "duration exceeds 24 h".to_string(),
            ));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(ChronicleError::InvalidEvent(format!(
                "confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        Ok(())
    }

    pub fn duration_ms(&self) -> i64 {
        self.end_ms - self.start_ms
    }

    /// Non-empty intersection with `[from, to)`.
    pub fn intersects(&self, from: EpochMs, to: EpochMs) -> bool {
        self.start_ms < to && self.end_ms > from
    }

    /// Milliseconds of this event inside `[from, to)`.
    pub fn clipped_ms(&self, from: EpochMs, to: EpochMs) -> i64 {
        (self.end_ms.min(to) - self.start_ms.max(from)).max(0)
    }
}

/// Summary statistics of one channel inside an atomic interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Fixed-length segment of the timeline with per-channel statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicInterval {
    pub start_ms: EpochMs,
    pub end_ms: EpochMs,
    pub granularity_min: u32,
    pub features: BTreeMap<String, ChannelStats>,
    /// No sample of any channel fell inside the interval.
    pub empty: bool,
}

impl AtomicInterval {
    pub fn stat(&self, channel: &str) -> Option<&ChannelStats> {
        self.features.get(channel)
    }
}

#[derive(Default)]
struct Acc {
    n: usize,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Acc {
    fn push(&mut self, x: f64) {
        if self.n == 0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn finish(&self) -> ChannelStats {
        ChannelStats {
            mean: self.mean,
            std: (self.m2 / self.n as f64).max(0.0).sqrt(),
            min: self.min,
            max: self.max,
            count: self.n,
        }
    }
}

/// Cuts time-sorted frames into contiguous `granularity`-minute intervals.
///
/// Interval boundaries are aligned to multiples of the granularity on the
/// epoch clock, so the intervals tile `[floor(first), ceil(last + 1 ms))`.
pub fn segment_atomic(
    rows: &[FrameRow],
    granularity_min: u32,
) -> Result<Vec<AtomicInterval>, ChronicleError> {
    if granularity_min != 1 && granularity_min != 5 {
        return Err(ChronicleError::InvalidGranularity(granularity_min));
    }
    if let Some(i) = rows.windows(2).position(|w| w[1].ts_ms < w[0].ts_ms) {
        return Err(ChronicleError::UnsortedInput(i + 1));
    }
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return Ok(Vec::new());
    };
    let g = granularity_min as i64 * MINUTE_MS;
    let start = first.ts_ms.div_euclid(g) * g;
    let end = (last.ts_ms + 1 + g - 1).div_euclid(g) * g;
    let n = ((end - start) / g) as usize;

    let mut out = Vec::with_capacity(n);
    let mut cursor = 0usize;
    for k in 0..n {
        let s = start + k as i64 * g;
        let e = s + g;
        let mut accs: BTreeMap<&str, Acc> = BTreeMap::new();
        while cursor < rows.len() && rows[cursor].ts_ms < e {
            for (ch, &v) in &rows[cursor].values {
                accs.entry(ch.as_str()).or_default().push(v);
            }
            cursor += 1;
        }
        let features: BTreeMap<String, ChannelStats> = accs
            .into_iter()
            .map(|(k, a)| (k.to_string(), a.finish()))
            .collect();
        out.push(AtomicInterval {
            start_ms: s,
            end_ms: e,
            granularity_min,
            empty: features.is_empty(),
            features,
        });
    }
    Ok(out)
}

/// Per-activity minutes of one local day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySummary {
    pub subject: SubjectId,
    pub date: NaiveDate,
    /// Minutes per label, clipped to the day; `Unknown` is reported separately.
    pub minutes: BTreeMap<ActivityLabel, f64>,
    pub unknown_minutes: f64,
    /// Union of labeled (non-`Unknown`) time over 1440 minutes.
    pub coverage: f64,
}

impl DailySummary {
    pub fn minutes_of(&self, label: ActivityLabel) -> f64 {
        if label == ActivityLabel::Unknown {
            self.unknown_minutes
        } else {
            self.minutes.get(&label).copied().unwrap_or(0.0)
        }
    }
}

/// An event with its per-subject sequence number.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredEvent {
    pub seq: u64,
    pub event: EventRecord,
}

#[derive(Serialize, Deserialize, Default)]
struct SnapshotIndex {
    last_seq: u64,
    days: BTreeMap<String, Vec<u64>>,
}

#[derive(Default)]
struct SubjectLog {
    events: Vec<StoredEvent>,
    by_label: BTreeMap<ActivityLabel, BTreeMap<EpochMs, (EpochMs, u64)>>,
    next_offset: u64,
    index: SnapshotIndex,
    unsnapshotted: u64,
}

/// Append-only event store, optionally persisted under a directory.
pub struct ChronicleStore {
    root: Option<PathBuf>,
    subjects: BTreeMap<SubjectId, SubjectLog>,
    snapshot_every: u64,
}

impl Default for ChronicleStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl ChronicleStore {
    pub fn in_memory() -> Self {
        ChronicleStore {
            root: None,
            subjects: BTreeMap::new(),
            snapshot_every: 256,
        }
    }

    /// Opens (or creates) a store rooted at `dir`, replaying every
    /// `{subject}.jsonl` log found there.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, ChronicleError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut store = ChronicleStore {
            root: Some(dir.clone()),
            subjects: BTreeMap::new(),
            snapshot_every: 256,
        };
        let mut logs: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        logs.sort();
        for path in logs {
            let reader = BufReader::new(File::open(&path)?);
            let mut offset = 0u64;
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                let len = line.len() as u64 + 1;
                if line.trim().is_empty() {
                    offset += len;
                    continue;
                }
                let event: EventRecord =
                    serde_json::from_str(&line).map_err(|e| ChronicleError::Corrupt {
                        path: path.clone(),
                        line: i + 1,
                        reason: e.to_string(),
                    })?;
                store.insert(event, offset)?;
                offset += len;
            }
        }
        for log in store.subjects.values_mut() {
            log.unsnapshotted = 0;
        }
        Ok(store)
    }

    pub fn set_snapshot_every(&mut self, n: u64) {
        self.snapshot_every = n.max(1);
    }

    pub fn register_subject(&mut self, subject: &SubjectId) {
        self.subjects.entry(subject.clone()).or_default();
    }

    pub fn subjects(&self) -> impl Iterator<Item = &SubjectId> {
        self.subjects.keys()
    }

    pub fn contains(&self, subject: &SubjectId) -> bool {
        self.subjects.contains_key(subject)
    }

    fn log(&self, subject: &SubjectId) -> Result<&SubjectLog, ChronicleError> {
        self.subjects
            .get(subject)
            .ok_or_else(|| ChronicleError::UnknownSubject(subject.to_string()))
    }

    fn check_overlap(&self, event: &EventRecord) -> Result<(), ChronicleError> {
        let Some(log) = self.subjects.get(&event.subject) else {
            return Ok(());
        };
        let Some(intervals) = log.by_label.get(&event.label) else {
            return Ok(());
        };
        // Same-label intervals are pairwise disjoint, so only the latest one
        // starting before our end can intersect us.
        if let Some((_, &(end, seq))) = intervals.range(..event.end_ms).next_back() {
            if end > event.start_ms {
                return Err(ChronicleError::OverlapConflict {
                    subject: event.subject.clone(),
                    label: event.label,
                    start_ms: event.start_ms,
                    end_ms: event.end_ms,
                    existing_seq: seq,
                });
            }
        }
        Ok(())
    }

    fn insert(&mut self, event: EventRecord, offset: u64) -> Result<u64, ChronicleError> {
        event.validate()?;
        self.check_overlap(&event)?;
        let log = self.subjects.entry(event.subject.clone()).or_default();
        let seq = log.events.len() as u64 + 1;
        log.by_label
            .entry(event.label)
            .or_default()
            .insert(event.start_ms, (event.end_ms, seq));
        let day = time::format_date(time::utc(event.start_ms).date_naive());
        log.index.days.entry(day).or_default().push(offset);
        log.index.last_seq = seq;
        log.unsnapshotted += 1;
        log.events.push(StoredEvent { seq, event });
        Ok(seq)
    }

    /// Validates and appends an event, returning its sequence number.
    pub fn append_event(&mut self, event: EventRecord) -> Result<u64, ChronicleError> {
        event.validate()?;
        self.check_overlap(&event)?;
        let line = serde_json::to_string(&event).expect("event serializes");
        let mut offset = 0;
        if let Some(root) = &self.root {
            let path = root.join(format!("{}.jsonl", event.subject));
            let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
            offset = file.seek(SeekFrom::End(0))?;
            writeln!(file, "{line}")?;
            file.flush()?;
        }
        let subject = event.subject.clone();
        let seq = self.insert(event, offset)?;
        if let Some(log) = self.subjects.get_mut(&subject) {
            log.next_offset = offset + line.len() as u64 + 1;
            if log.unsnapshotted >= self.snapshot_every {
                self.write_snapshot(&subject)?;
            }
        }
        Ok(seq)
    }

    fn write_snapshot(&mut self, subject: &SubjectId) -> Result<(), ChronicleError> {
        let Some(root) = self.root.clone() else {
            return Ok(());
        };
        let Some(log) = self.subjects.get_mut(subject) else {
            return Ok(());
        };
        let path = root.join(format!("{subject}.snapshot.json"));
        let tmp = root.join(format!("{subject}.snapshot.json.tmp"));
        fs::write(&tmp, serde_json::to_vec(&log.index).expect("index serializes"))?;
        fs::rename(tmp, path)?;
        log.unsnapshotted = 0;
        Ok(())
    }

    /// Writes the day → byte-offset index of every subject.
    pub fn snapshot(&mut self) -> Result<(), ChronicleError> {
        let subjects: Vec<SubjectId> = self.subjects.keys().cloned().collect();
        for s in subjects {
            self.write_snapshot(&s)?;
        }
        Ok(())
    }

    /// Number of stored events for a subject, which is also its last sequence number.
    pub fn len(&self, subject: &SubjectId) -> usize {
        self.subjects.get(subject).map_or(0, |l| l.events.len())
    }

    pub fn is_empty(&self, subject: &SubjectId) -> bool {
        self.len(subject) == 0
    }

    pub fn events(&self, subject: &SubjectId) -> Result<&[StoredEvent], ChronicleError> {
        Ok(&self.log(subject)?.events)
    }

    /// Events intersecting `[from, to)`, ordered by start.
    pub fn query_window(
        &self,
        subject: &SubjectId,
        from: EpochMs,
        to: EpochMs,
        label_filter: Option<ActivityLabel>,
    ) -> Result<Vec<EventRecord>, ChronicleError> {
        self.query_window_as_of(subject, from, to, label_filter, u64::MAX)
    }

    /// Like [`query_window`](Self::query_window) but only sees events with
    /// sequence number `<= as_of_seq`, giving readers a point-in-time view.
    pub fn query_window_as_of(
        &self,
        subject: &SubjectId,
        from: EpochMs,
        to: EpochMs,
        label_filter: Option<ActivityLabel>,
        as_of_seq: u64,
    ) -> Result<Vec<EventRecord>, ChronicleError> {
        if from >= to {
            return Err(ChronicleError::InvalidWindow { from, to });
        }
        let log = self.log(subject)?;
        let mut hits: Vec<&StoredEvent> = log
            .events
            .iter()
            .take_while(|e| e.seq <= as_of_seq)
            .filter(|e| e.event.intersects(from, to))
            .filter(|e| label_filter.is_none_or(|l| e.event.label == l))
            .collect();
        hits.sort_by_key(|e| (e.event.start_ms, e.seq));
        Ok(hits.into_iter().map(|e| e.event.clone()).collect())
    }

    pub fn daily_summary(
        &self,
        subject: &SubjectId,
        date: NaiveDate,
        tz: Tz,
    ) -> Result<DailySummary, ChronicleError> {
        let (from, to) = time::day_bounds(date, tz);
        let events = self.query_window(subject, from, to, None)?;
        Ok(summarize_day(subject, date, from, to, &events))
    }

    /// Reads the events of one UTC day straight from disk through the snapshot index.
    pub fn read_day_from_snapshot(
        dir: &Path,
        subject: &SubjectId,
        day: NaiveDate,
    ) -> Result<Vec<EventRecord>, ChronicleError> {
        let index_path = dir.join(format!("{subject}.snapshot.json"));
        let index: SnapshotIndex = match fs::read(&index_path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| ChronicleError::Corrupt {
                path: index_path.clone(),
                line: 1,
                reason: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => SnapshotIndex::default(),
            Err(e) => return Err(e.into()),
        };
        let Some(offsets) = index.days.get(&time::format_date(day)) else {
            return Ok(Vec::new());
        };
        let log_path = dir.join(format!("{subject}.jsonl"));
        let mut file = File::open(&log_path)?;
        let mut out = Vec::with_capacity(offsets.len());
        for &off in offsets {
            file.seek(SeekFrom::Start(off))?;
            let mut reader = BufReader::new((&mut file).take(1 << 20));
            let mut line = String::new();
            reader.read_line(&mut line)?;
            out.push(
                serde_json::from_str(line.trim_end()).map_err(|e| ChronicleError::Corrupt {
                    path: log_path.clone(),
                    line: 0,
                    reason: e.to_string(),
                })?,
            );
        }
        Ok(out)
    }
}

/// Aggregates events into per-label minutes over `[from, to)`.
pub fn summarize_day(
    subject: &SubjectId,
    date: NaiveDate,
    from: EpochMs,
    to: EpochMs,
    events: &[EventRecord],
) -> DailySummary {
    let mut minutes: BTreeMap<ActivityLabel, f64> = BTreeMap::new();
    let mut unknown = 0.0;
    let mut labeled: Vec<(EpochMs, EpochMs)> = Vec::new();
    for e in events {
        let ms = e.clipped_ms(from, to);
        if ms == 0 {
            continue;
        }
        let m = ms as f64 / MINUTE_MS as f64;
        if e.label == ActivityLabel::Unknown {
            unknown += m;
        } else {
            *minutes.entry(e.label).or_default() += m;
            labeled.push((e.start_ms.max(from), e.end_ms.min(to)));
        }
    }
    labeled.sort_unstable();
    let mut union_ms = 0i64;
    let mut cur: Option<(EpochMs, EpochMs)> = None;
    for (s, e) in labeled {
        match cur {
            Some((cs, ce)) if s <= ce => cur = Some((cs, ce.max(e))),
            Some((cs, ce)) => {
                union_ms += ce - cs;
                cur = Some((s, e));
            }
            None => cur = Some((s, e)),
        }
    }
    if let Some((cs, ce)) = cur {
        union_ms += ce - cs;
    }
    for v in minutes.values_mut() {
        *v = v.min(1440.0);
    }
    DailySummary {
        subject: subject.clone(),
        date,
        minutes,
        unknown_minutes: unknown.min(1440.0),
        coverage: (union_ms as f64 / MINUTE_MS as f64 / 1440.0).clamp(0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::HOUR_MS;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sid(s: &str) -> SubjectId {
        SubjectId::new(s).unwrap()
    }

    fn ev(label: ActivityLabel, s: i64, e: i64) -> EventRecord {
        EventRecord::new(sid("s1"), label, s, e, EventSource::Manual)
    }

    #[test]
    fn subject_id_validation() {
        assert!(SubjectId::new("subj_01-a").is_ok());
        assert!(SubjectId::new("").is_err());
        assert!(SubjectId::new("a b").is_err());
        assert!(SubjectId::new("x".repeat(65)).is_err());
    }

    #[test]
    fn label_names_round_trip() {
        assert_eq!(ActivityLabel::ALL.len(), 25);
        for l in ActivityLabel::ALL {
            assert_eq!(l.as_str().parse::<ActivityLabel>().unwrap(), *l);
        }
        assert_eq!(
            "using_toilet".parse::<ActivityLabel>().unwrap(),
            ActivityLabel::UsingToilet
        );
        assert_eq!(
            "Using Toilet".parse::<ActivityLabel>().unwrap(),
            ActivityLabel::UsingToilet
        );
    }

    #[test]
    fn first_event_gets_sequence_one() {
        let mut st = ChronicleStore::in_memory();
        assert_eq!(st.append_event(ev(ActivityLabel::Eating, 0, 10)).unwrap(), 1);
    }

    #[test]
    fn same_label_overlap_rejected_other_label_allowed() {
        let mut st = ChronicleStore::in_memory();
        let noon = 12 * HOUR_MS;
        st.append_event(ev(ActivityLabel::Eating, noon, noon + 30 * MINUTE_MS))
            .unwrap();
        let err = st
            .append_event(ev(
                ActivityLabel::Eating,
                noon + 15 * MINUTE_MS,
                noon + 45 * MINUTE_MS,
            ))
            .unwrap_err();
        assert!(matches!(err, ChronicleError::OverlapConflict { existing_seq: 1, .. }));
        st.append_event(ev(
            ActivityLabel::OnTheSmartphone,
            noon + 15 * MINUTE_MS,
            noon + 45 * MINUTE_MS,
        ))
        .unwrap();
        // touching intervals do not overlap
        st.append_event(ev(
            ActivityLabel::Eating,
            noon + 30 * MINUTE_MS,
            noon + 40 * MINUTE_MS,
        ))
        .unwrap();
        // an earlier event entirely before is fine, one containing the first is not
        st.append_event(ev(ActivityLabel::Eating, 0, 10)).unwrap();
        assert!(st
            .append_event(ev(ActivityLabel::Eating, noon - 1, noon + 60 * MINUTE_MS))
            .is_err());
        assert_eq!(st.len(&sid("s1")), 4);
    }

    #[test]
    fn invalid_events_rejected() {
        let mut st = ChronicleStore::in_memory();
        assert!(matches!(
            st.append_event(ev(ActivityLabel::Eating, 10, 10)),
            Err(ChronicleError::InvalidEvent(_))
        ));
        assert!(st
            .append_event(ev(ActivityLabel::Eating, 0, DAY_MS + 1))
            .is_err());
        assert!(st
            .append_event(ev(ActivityLabel::Eating, 0, 10).with_confidence(1.5))
            .is_err());
    }

    #[test]
    fn thousand_appends_sequence_in_order() {
        let mut st = ChronicleStore::in_memory();
        let mut counter = 0u64;
        for i in 0..1000i64 {
            counter += 1;
            let seq = st
                .append_event(ev(ActivityLabel::Walking, i * 100, i * 100 + 50))
                .unwrap();
            assert_eq!(seq, counter);
        }
        let seqs: Vec<u64> = st.events(&sid("s1")).unwrap().iter().map(|e| e.seq).collect();
        assert_eq!(seqs, (1..=1000).collect::<Vec<_>>());
    }

    #[test]
    fn window_queries() {
        let mut st = ChronicleStore::in_memory();
        st.append_event(ev(ActivityLabel::Working, 100, 200)).unwrap();
        assert!(st.query_window(&sid("s1"), 300, 400, None).unwrap().is_empty());
        let hit = st.query_window(&sid("s1"), 150, 160, None).unwrap();
        assert_eq!(hit.len(), 1);
        assert!(matches!(
            st.query_window(&sid("nobody"), 0, 1, None),
            Err(ChronicleError::UnknownSubject(_))
        ));
        assert!(st.query_window(&sid("s1"), 5, 5, None).is_err());
        // half-open: an event ending exactly at `from` is excluded
        assert!(st.query_window(&sid("s1"), 200, 300, None).unwrap().is_empty());
    }

    #[test]
    fn point_in_time_reads() {
        let mut st = ChronicleStore::in_memory();
        st.append_event(ev(ActivityLabel::Working, 100, 200)).unwrap();
        st.append_event(ev(ActivityLabel::Eating, 150, 250)).unwrap();
        assert_eq!(
            st.query_window_as_of(&sid("s1"), 0, 1000, None, 1).unwrap().len(),
            1
        );
        assert_eq!(st.query_window(&sid("s1"), 0, 1000, None).unwrap().len(), 2);
    }

    #[test]
    fn random_day_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut st = ChronicleStore::in_memory();
        let mut all = Vec::new();
        while all.len() < 50 {
            let label = ActivityLabel::ALL[rng.gen_range(0..24)];
            let s = rng.gen_range(0..DAY_MS - HOUR_MS);
            let e = s + rng.gen_range(MINUTE_MS..2 * HOUR_MS);
            let event = ev(label, s, e);
            if st.append_event(event.clone()).is_ok() {
                all.push(event);
            }
        }
        for _ in 0..200 {
            let a = rng.gen_range(0..DAY_MS);
            let b = rng.gen_range(0..DAY_MS);
            if a == b {
                continue;
            }
            let (from, to) = (a.min(b), a.max(b));
            let got = st.query_window(&sid("s1"), from, to, None).unwrap();
            let mut want: Vec<EventRecord> = all
                .iter()
                .filter(|e| e.start_ms < to && e.end_ms > from)
                .cloned()
                .collect();
            want.sort_by_key(|e| e.start_ms);
            assert_eq!(got, want);
        }
    }

    fn row(ts: i64, vals: &[(&str, f64)]) -> FrameRow {
        FrameRow {
            ts_ms: ts,
            values: vals.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn ten_minutes_at_one_hz_five_minute_granularity() {
        let rows: Vec<FrameRow> = (0..600).map(|i| row(i * 1000, &[("hr", 70.0)])).collect();
        let iv = segment_atomic(&rows, 5).unwrap();
        assert_eq!(iv.len(), 2);
        for i in &iv {
            assert_eq!(i.end_ms - i.start_ms, 5 * MINUTE_MS);
            let hr = i.stat("hr").unwrap();
            assert_eq!(hr.count, 300);
            assert_eq!(hr.mean, 70.0);
            assert_eq!(hr.std, 0.0);
        }
    }

    #[test]
    fn sine_interval_means_match_direct_recomputation() {
        let rows: Vec<FrameRow> = (0..1800)
            .map(|i| row(i * 1000, &[("x", (i as f64 * 0.05).sin() * 3.0 + 1.0)]))
            .collect();
        let iv = segment_atomic(&rows, 1).unwrap();
        assert_eq!(iv.len(), 30);
        for i in &iv {
            let samples: Vec<f64> = rows
                .iter()
                .filter(|r| r.ts_ms >= i.start_ms && r.ts_ms < i.end_ms)
                .map(|r| r.values["x"])
                .collect();
            let direct = samples.iter().sum::<f64>() / samples.len() as f64;
            assert!((i.stat("x").unwrap().mean - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn segment_errors_and_empty_intervals() {
        assert!(matches!(
            segment_atomic(&[row(10, &[]), row(5, &[])], 1),
            Err(ChronicleError::UnsortedInput(1))
        ));
        assert!(matches!(
            segment_atomic(&[], 2),
            Err(ChronicleError::InvalidGranularity(2))
        ));
        let rows = vec![row(0, &[("x", 1.0)]), row(3 * MINUTE_MS, &[("x", 2.0)])];
        let iv = segment_atomic(&rows, 1).unwrap();
        assert_eq!(iv.len(), 4);
        assert!(!iv[0].empty && iv[1].empty && iv[2].empty && !iv[3].empty);
    }

    proptest! {
        #[test]
        fn intervals_tile_the_span(
            start in 0i64..10_000_000,
            gaps in proptest::collection::vec(1i64..90_000, 1..200),
            g in prop_oneof![Just(1u32), Just(5u32)],
        ) {
            let mut ts = start;
            let mut rows = vec![row(ts, &[("x", 0.0)])];
            for d in gaps { ts += d; rows.push(row(ts, &[("x", 1.0)])); }
            let iv = segment_atomic(&rows, g).unwrap();
            let gm = g as i64 * MINUTE_MS;
            prop_assert!(iv[0].start_ms <= rows[0].ts_ms);
            prop_assert!(iv.last().unwrap().end_ms > rows.last().unwrap().ts_ms);
            for w in iv.windows(2) { prop_assert_eq!(w[0].end_ms, w[1].start_ms); }
            let total: usize = iv.iter().map(|i| i.stat("x").map_or(0, |s| s.count)).sum();
            prop_assert_eq!(total, rows.len());
            for i in &iv { prop_assert_eq!(i.end_ms - i.start_ms, gm); }
        }
    }

    #[test]
    fn daily_summary_cases() {
        let mut st = ChronicleStore::in_memory();
        let d = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
        st.register_subject(&sid("s1"));
        let empty = st.daily_summary(&sid("s1"), d, chrono_tz::UTC).unwrap();
        assert!(empty.minutes.is_empty());
        assert_eq!(empty.coverage, 0.0);
        st.append_event(ev(ActivityLabel::Sleeping, 0, 8 * HOUR_MS)).unwrap();
        let s = st.daily_summary(&sid("s1"), d, chrono_tz::UTC).unwrap();
        assert_eq!(s.minutes_of(ActivityLabel::Sleeping), 480.0);
        assert!((s.coverage - 480.0 / 1440.0).abs() < 1e-12);
        // an event crossing midnight is clipped; Unknown does not add coverage
        st.append_event(ev(ActivityLabel::Unknown, 23 * HOUR_MS, 25 * HOUR_MS)).unwrap();
        st.append_event(ev(ActivityLabel::OnTheSmartphone, 7 * HOUR_MS, 9 * HOUR_MS))
            .unwrap();
        let s = st.daily_summary(&sid("s1"), d, chrono_tz::UTC).unwrap();
        assert_eq!(s.unknown_minutes, 60.0);
        assert!((s.coverage - 540.0 / 1440.0).abs() < 1e-12);
    }

    #[test]
    fn persistence_round_trip_and_snapshot_index() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut st = ChronicleStore::open(dir.path()).unwrap();
            st.set_snapshot_every(2);
            st.append_event(ev(ActivityLabel::Working, 100, 200)).unwrap();
            st.append_event(ev(ActivityLabel::Eating, DAY_MS + 5, DAY_MS + 50))
                .unwrap();
            st.append_event(ev(ActivityLabel::Walking, DAY_MS + 60, DAY_MS + 70))
                .unwrap();
            st.snapshot().unwrap();
        }
        let st = ChronicleStore::open(dir.path()).unwrap();
        assert_eq!(st.len(&sid("s1")), 3);
        let day2 = ChronicleStore::read_day_from_snapshot(
            dir.path(),
            &sid("s1"),
            NaiveDate::from_ymd_opt(1970, 1, 2).unwrap(),
        )
        .unwrap();
        assert_eq!(day2.len(), 2);
        assert_eq!(day2[0].label, ActivityLabel::Eating);
        // reopening keeps overlap state
        let mut st = st;
        assert!(st.append_event(ev(ActivityLabel::Working, 150, 160)).is_err());
    }

    #[test]
    fn jsonl_field_names() {
        let line = serde_json::to_string(
            &ev(ActivityLabel::UsingToilet, 1, 2).with_attributes(["Walking", "Work"]),
        )
        .unwrap();
        assert_eq!(
            line,
            r#"{"subject":"s1","label":"Using toilet","start_ms":1,"end_ms":2,"attributes":["Walking","Work"],"source":"manual","confidence":1.0}"#
        );
    }
}
