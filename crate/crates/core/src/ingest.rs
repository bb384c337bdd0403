//! Gateway layer: sensor stream files, validation, and multi-rate alignment.
//!
//! Each channel of each subject-day lives in `data/{subject}/{date}/{channel}.csv`
//! with header `ts_ms,value` (optionally `ts_ms,value:<units>`). The EMA channel
//! uses `ema.csv` with `ts_ms,prompt_kind,positive,negative,free_text`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chronicle::SubjectId;
use crate::time::{EpochMs, MINUTE_MS};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}:{line}: {reason}")]
    FormatError {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: timestamp does not increase")]
    NonMonotonicTime { path: String, line: usize },
    #[error("{path}: units {found:?} do not match expected {expected:?}")]
    UnitMismatch {
        path: String,
        expected: String,
        found: String,
    },
    #[error("no batches to align")]
    EmptyInput,
    #[error("batches belong to different subjects ({0} and {1})")]
    MixedSubjects(String, String),
    #[error("period must be at least 10 ms, got {0}")]
    PeriodTooSmall(i64),
    #[error("layout error: {0}")]
    LayoutError(String),
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
    #[error("ingest io: {0}")]
    Io(#[from] std::io::Error),
}

/// Sensor channels carried by the gateway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Ppg,
    Gsr,
    AccelMag,
    Hr,
    Steps,
    GpsClass,
    ScreenOn,
    Ema,
}

impl Channel {
    pub const ALL: [Channel; 8] = [
        Channel::Ppg,
        Channel::Gsr,
        Channel::AccelMag,
        Channel::Hr,
        Channel::Steps,
        Channel::GpsClass,
        Channel::ScreenOn,
        Channel::Ema,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Ppg => "ppg",
            Channel::Gsr => "gsr",
            Channel::AccelMag => "accel_mag",
            Channel::Hr => "hr",
            Channel::Steps => "steps",
            Channel::GpsClass => "gps_class",
            Channel::ScreenOn => "screen_on",
            Channel::Ema => "ema",
        }
    }

    /// Descriptor used by the simulator and by default ingestion.
    pub fn default_descriptor(self) -> StreamDescriptor {
        let (rate, units) = match self {
            Channel::Ppg => (25.0, "au"),
            Channel::Gsr => (4.0, "microsiemens"),
            Channel::AccelMag => (0.1, "g"),
            Channel::Hr => (1.0 / 60.0, "bpm"),
            Channel::Steps => (0.0, "steps"),
            Channel::GpsClass => (0.0, "class"),
            Channel::ScreenOn => (0.0, "bool"),
            Channel::Ema => (0.0, "affect"),
        };
        StreamDescriptor {
            channel: self,
            nominal_rate_hz: rate,
            units: units.to_string(),
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.as_str())
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Channel::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown channel {s:?}"))
    }
}

/// Location categories carried by `gps_class` as numeric codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationClass {
    Unknown,
    Home,
    Work,
    Restaurant,
    Transit,
    SocialVenue,
    Outdoor,
}

impl LocationClass {
    pub fn code(self) -> f64 {
        self as u8 as f64
    }

    pub fn from_code(code: f64) -> Self {
        match code.round() as i64 {
            1 => LocationClass::Home,
            2 => LocationClass::Work,
            3 => LocationClass::Restaurant,
            4 => LocationClass::Transit,
            5 => LocationClass::SocialVenue,
            6 => LocationClass::Outdoor,
            _ => LocationClass::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamDescriptor {
    pub channel: Channel,
    /// Samples per second; `0` marks an event-based channel.
    pub nominal_rate_hz: f64,
    pub units: String,
}

impl StreamDescriptor {
    pub fn is_event_based(&self) -> bool {
        self.nominal_rate_hz == 0.0
    }

    pub fn nominal_period_ms(&self) -> Option<f64> {
        (self.nominal_rate_hz > 0.0).then(|| 1000.0 / self.nominal_rate_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmaRowKind {
    Momentary,
    EndOfDay,
    Weekly,
}

impl EmaRowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmaRowKind::Momentary => "momentary",
            EmaRowKind::EndOfDay => "end_of_day",
            EmaRowKind::Weekly => "weekly",
        }
    }
}

/// One EMA prompt occurrence. Missed prompts have no affect values and
/// carry the scheduled time; answered rows carry the answer time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmaRow {
    pub ts_ms: EpochMs,
    pub prompt_kind: EmaRowKind,
    pub positive: Option<u8>,
    pub negative: Option<u8>,
    pub free_text: Option<String>,
}

impl EmaRow {
    pub fn answered(&self) -> bool {
        self.positive.is_some() && self.negative.is_some()
    }
}

/// A validated run of samples from one channel of one subject.
///
/// For the EMA channel `values[i]` is `1` for an answered prompt and `0` for a
/// missed one, and `ema` holds the full rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub subject: SubjectId,
    pub descriptor: StreamDescriptor,
    pub timestamps: Vec<EpochMs>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ema: Vec<EmaRow>,
}

impl SampleBatch {
    pub fn new(
        subject: SubjectId,
        descriptor: StreamDescriptor,
        timestamps: Vec<EpochMs>,
        values: Vec<f64>,
    ) -> Result<Self, IngestError> {
        let b = SampleBatch {
            subject,
            descriptor,
            timestamps,
            values,
            ema: Vec::new(),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn from_ema_rows(subject: SubjectId, rows: Vec<EmaRow>) -> Result<Self, IngestError> {
        let b = SampleBatch {
            subject,
            descriptor: Channel::Ema.default_descriptor(),
            timestamps: rows.iter().map(|r| r.ts_ms).collect(),
            values: rows
                .iter()
                .map(|r| if r.answered() { 1.0 } else { 0.0 })
                .collect(),
            ema: rows,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.timestamps.len() != self.values.len() {
            return Err(IngestError::InvalidBatch(format!(
                "{} timestamps but {} values",
                self.timestamps.len(),
                self.values.len()
            )));
        }
        if !(self.descriptor.nominal_rate_hz >= 0.0 && self.descriptor.nominal_rate_hz.is_finite())
        {
            return Err(IngestError::InvalidBatch("negative rate".into()));
        }
        if let Some(i) = self.timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(IngestError::InvalidBatch(format!(
                "timestamps not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::InvalidBatch(format!("non-finite value at index {i}")));
        }
        if self.descriptor.channel == Channel::Ema && self.ema.len() != self.timestamps.len() {
            return Err(IngestError::InvalidBatch("ema rows do not match timestamps".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn first_ts(&self) -> Option<EpochMs> {
        self.timestamps.first().copied()
    }

    pub fn channel(&self) -> Channel {
        self.descriptor.channel
    }
}

fn format_err(path: &str, line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::FormatError {
        path: path.to_string(),
        line,
        reason: reason.into(),
    }
}

fn parse_header_units(path: &str, header: &csv::StringRecord) -> Result<Option<String>, IngestError> {
    if header.len() != 2 || header.get(0) != Some("ts_ms") {
        return Err(format_err(path, 1, "expected header ts_ms,value"));
    }
    let col = header.get(1).unwrap_or_default();
    match col.split_once(':') {
        None if col == "value" => Ok(None),
        Some(("value", units)) => Ok(Some(units.to_string())),
        _ => Err(format_err(path, 1, "expected header ts_ms,value")),
    }
}

/// Parses a `ts_ms,value` stream from any reader.
pub fn parse_csv<R: Read>(
    reader: R,
    path: &str,
    subject: SubjectId,
    expected: &StreamDescriptor,
) -> Result<SampleBatch, IngestError> {
    if expected.channel == Channel::Ema {
        let rows = parse_ema_csv(reader, path)?;
        return SampleBatch::from_ema_rows(subject, rows);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    match records.next() {
        None => {}
        Some(header) => {
            let header = header.map_err(|e| format_err(path, 1, e.to_string()))?;
            if let Some(units) = parse_header_units(path, &header)? {
                if units != expected.units {
                    return Err(IngestError::UnitMismatch {
                        path: path.to_string(),
                        expected: expected.units.clone(),
                        found: units,
                    });
                }
            }
        }
    }
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| format_err(path, line, e.to_string()))?;
        if rec.len() != 2 {
            return Err(format_err(path, line, format!("expected 2 fields, got {}", rec.len())));
        }
        let ts: EpochMs = rec[0]
            .trim()
            .parse()
            .map_err(|_| format_err(path, line, format!("bad timestamp {:?}", &rec[0])))?;
        let v: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| format_err(path, line, format!("bad value {:?}", &rec[1])))?;
        if !v.is_finite() {
            return Err(format_err(path, line, "non-finite value"));
        }
        if timestamps.last().is_some_and(|&last| ts <= last) {
            return Err(IngestError::NonMonotonicTime {
                path: path.to_string(),
                line,
            });
        }
        timestamps.push(ts);
        values.push(v);
    }
    Ok(SampleBatch {
        subject,
        descriptor: expected.clone(),
        timestamps,
        values,
        ema: Vec::new(),
    })
}

pub fn parse_ema_csv<R: Read>(reader: R, path: &str) -> Result<Vec<EmaRow>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    if let Some(header) = records.next() {
        let header = header.map_err(|e| format_err(path, 1, e.to_string()))?;
        let cols: Vec<&str> = header.iter().collect();
        if cols != ["ts_ms", "prompt_kind", "positive", "negative", "free_text"] {
            return Err(format_err(
                path,
                1,
                "expected header ts_ms,prompt_kind,positive,negative,free_text",
            ));
        }
    }
    let mut rows: Vec<EmaRow> = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| format_err(path, line, e.to_string()))?;
        if rec.len() != 5 {
            return Err(format_err(path, line, format!("expected 5 fields, got {}", rec.len())));
        }
        let ts: EpochMs = rec[0]
            .trim()
            .parse()
            .map_err(|_| format_err(path, line, format!("bad timestamp {:?}", &rec[0])))?;
        let kind = match rec[1].trim() {
            "momentary" => EmaRowKind::Momentary,
            "end_of_day" => EmaRowKind::EndOfDay,
            "weekly" => EmaRowKind::Weekly,
            other => return Err(format_err(path, line, format!("bad prompt_kind {other:?}"))),
        };
        let affect = |s: &str| -> Result<Option<u8>, IngestError> {
            let s = s.trim();
            if s.is_empty() {
                return Ok(None);
            }
            match s.parse::<u8>() {
                Ok(v) if v <= 100 => Ok(Some(v)),
                _ => Err(format_err(path, line, format!("affect {s:?} not an integer in 0..=100"))),
            }
        };
        let positive = affect(&rec[2])?;
        let negative = affect(&rec[3])?;
        if positive.is_some() != negative.is_some() {
            return Err(format_err(path, line, "positive and negative must both be present or absent"));
        }
        let text = rec[4].to_string();
        if rows.last().is_some_and(|r| ts <= r.ts_ms) {
            return Err(IngestError::NonMonotonicTime {
                path: path.to_string(),
                line,
            });
        }
        rows.push(EmaRow {
            ts_ms: ts,
            prompt_kind: kind,
            positive,
            negative,
            free_text: (!text.is_empty()).then_some(text),
        });
    }
    Ok(rows)
}

/// Parses one stream file, taking the subject from the
/// `{subject}/{date}/{channel}.csv` layout.
pub fn parse_stream(path: &Path, expected: &StreamDescriptor) -> Result<SampleBatch, IngestError> {
    let subject = path
        .parent()
        .and_then(Path::parent)
        .and_then(Path::file_name)
        .and_then(|s| s.to_str())
        .ok_or_else(|| IngestError::LayoutError(format!("cannot infer subject from {}", path.display())))?;
    let subject = SubjectId::new(subject).map_err(|e| IngestError::LayoutError(e.to_string()))?;
    parse_stream_for(path, subject, expected)
}

pub fn parse_stream_for(
    path: &Path,
    subject: SubjectId,
    expected: &StreamDescriptor,
) -> Result<SampleBatch, IngestError> {
    let file = File::open(path)?;
    parse_csv(file, &path.display().to_string(), subject, expected)
}

/// Writes a batch in the wire format. Values use the shortest representation
/// that parses back to the identical `f64`.
pub fn write_stream<W: Write>(out: W, batch: &SampleBatch) -> Result<(), IngestError> {
    let mut w = BufWriter::new(out);
    if batch.descriptor.channel == Channel::Ema {
        drop(w);
        return Err(IngestError::InvalidBatch("use write_ema for the ema channel".into()));
    }
    writeln!(w, "ts_ms,value")?;
    for (t, v) in batch.timestamps.iter().zip(&batch.values) {
        writeln!(w, "{t},{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ema<W: Write>(out: W, rows: &[EmaRow]) -> Result<(), IngestError> {
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::NonNumeric)
        .from_writer(out);
    w.write_record(["ts_ms", "prompt_kind", "positive", "negative", "free_text"])
        .map_err(|e| IngestError::Io(e.into()))?;
    for r in rows {
        let opt = |v: Option<u8>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            r.ts_ms.to_string(),
            r.prompt_kind.as_str().to_string(),
            opt(r.positive),
            opt(r.negative),
            r.free_text.clone().unwrap_or_default(),
        ])
        .map_err(|e| IngestError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

/// Location of a stream file in the data directory.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LayoutEntry {
    pub subject: SubjectId,
    pub date: NaiveDate,
    pub channel: Channel,
    pub path: PathBuf,
}

pub fn layout_path(root: &Path, subject: &SubjectId, date: NaiveDate, channel: Channel) -> PathBuf {
    root.join(subject.as_str())
        .join(crate::time::format_date(date))
        .join(channel.file_name())
}

/// Lists every `{subject}/{date}/{channel}.csv` file under `root`, sorted.
/// Unknown files are a layout error; a missing or empty root yields nothing.
pub fn scan_layout(root: &Path) -> Result<Vec<LayoutEntry>, IngestError> {
    let mut out = Vec::new();
    if !root.exists() {
        return Ok(out);
    }
    let layout = |m: String| IngestError::LayoutError(m);
    for subj in fs::read_dir(root)? {
        let subj = subj?;
        if !subj.file_type()?.is_dir() {
            continue;
        }
        let name = subj.file_name().to_string_lossy().to_string();
        let subject = SubjectId::new(&name).map_err(|e| layout(e.to_string()))?;
        for day in fs::read_dir(subj.path())? {
            let day = day?;
            let dname = day.file_name().to_string_lossy().to_string();
            let date = NaiveDate::parse_from_str(&dname, "%Y-%m-%d")
                .map_err(|_| layout(format!("bad date directory {}", day.path().display())))?;
            for file in fs::read_dir(day.path())? {
                let file = file?;
                let fname = file.file_name().to_string_lossy().to_string();
                let stem = fname
                    .strip_suffix(".csv")
                    .ok_or_else(|| layout(format!("unexpected file {}", file.path().display())))?;
                let channel: Channel = stem.parse().map_err(layout)?;
                out.push(LayoutEntry {
                    subject: subject.clone(),
                    date,
                    channel,
                    path: file.path(),
                });
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub period_ms: i64,
    /// Grid points farther than this many nominal periods from any sample are masked.
    pub gap_factor: f64,
    /// Carry-forward window for event-based channels.
    pub ema_carry_forward_min: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            period_ms: 10_000,
            gap_factor: 2.0,
            ema_carry_forward_min: 5.0,
        }
    }
}

/// Channels resampled onto one uniform grid with a presence mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedFrame {
    pub start_ms: EpochMs,
    pub period_ms: i64,
    pub len: usize,
    pub channels: BTreeMap<Channel, Vec<f64>>,
    pub present: BTreeMap<Channel, Vec<bool>>,
}

/// One grid point with the channels present there.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub ts_ms: EpochMs,
    pub values: BTreeMap<String, f64>,
}

impl AlignedFrame {
    pub fn timestamp(&self, i: usize) -> EpochMs {
        self.start_ms + i as i64 * self.period_ms
    }

    pub fn rows(&self) -> Vec<FrameRow> {
        (0..self.len)
            .map(|i| FrameRow {
                ts_ms: self.timestamp(i),
                values: self
                    .channels
                    .iter()
                    .filter(|(c, _)| self.present[*c][i])
                    .map(|(c, v)| (c.as_str().to_string(), v[i]))
                    .collect(),
            })
            .collect()
    }

    pub fn masked_fraction(&self, channel: Channel) -> Option<f64> {
        let mask = self.present.get(&channel)?;
        if mask.is_empty() {
            return Some(0.0);
        }
        Some(mask.iter().filter(|p| !**p).count() as f64 / mask.len() as f64)
    }
}

/// Resamples each channel onto a common grid.
///
/// Rate channels use linear interpolation between neighboring samples and are
/// masked where the nearest sample is farther than `gap_factor` nominal
/// periods. Event-based channels carry the last observation forward for at
/// most `ema_carry_forward_min` minutes.
pub fn align_resample(
    batches: &[SampleBatch],
    period_ms: i64,
    cfg: &IngestConfig,
) -> Result<AlignedFrame, IngestError> {
    if period_ms < 10 {
        return Err(IngestError::PeriodTooSmall(period_ms));
    }
    let first = batches.first().ok_or(IngestError::EmptyInput)?;
    if let Some(b) = batches.iter().find(|b| b.subject != first.subject) {
        return Err(IngestError::MixedSubjects(
            first.subject.to_string(),
            b.subject.to_string(),
        ));
    }
    let mut merged: BTreeMap<Channel, (StreamDescriptor, Vec<(EpochMs, f64)>)> = BTreeMap::new();
    for b in batches {
        let entry = merged
            .entry(b.channel())
            .or_insert_with(|| (b.descriptor.clone(), Vec::new()));
        entry
            .1
            .extend(b.timestamps.iter().copied().zip(b.values.iter().copied()));
    }
    for (_, samples) in merged.values_mut() {
        samples.sort_by_key(|s| s.0);
        samples.dedup_by_key(|s| s.0);
    }
    let min_ts = merged.values().filter_map(|(_, s)| s.first().map(|x| x.0)).min();
    let max_ts = merged.values().filter_map(|(_, s)| s.last().map(|x| x.0)).max();
    let (Some(start), Some(end)) = (min_ts, max_ts) else {
        return Ok(AlignedFrame {
            start_ms: 0,
            period_ms,
            len: 0,
            channels: merged.keys().map(|c| (*c, Vec::new())).collect(),
            present: merged.keys().map(|c| (*c, Vec::new())).collect(),
        });
    };
    let len = ((end - start) / period_ms) as usize + 1;
    let carry_ms = cfg.ema_carry_forward_min * MINUTE_MS as f64;

    let mut channels = BTreeMap::new();
    let mut present = BTreeMap::new();
    for (ch, (desc, samples)) in merged {
        let mut vals = vec![0.0; len];
        let mut mask = vec![false; len];
        let mut idx = 0usize; // first sample with ts >= t
        for k in 0..len {
            let t = start + k as i64 * period_ms;
            while idx < samples.len() && samples[idx].0 < t {
                idx += 1;
            }
            let next = samples.get(idx);
            let prev = idx.checked_sub(1).map(|i| samples[i]);
            match desc.nominal_period_ms() {
                None => {
                    let at_or_before = match next {
                        Some(&(ts, v)) if ts == t => Some((ts, v)),
                        _ => prev,
                    };
                    if let Some((ts, v)) = at_or_before {
                        if (t - ts) as f64 <= carry_ms {
                            vals[k] = v;
                            mask[k] = true;
                        }
                    }
                }
                Some(nominal) => {
                    let limit = cfg.gap_factor * nominal;
                    let d_prev = prev.map(|p| (t - p.0) as f64);
                    let d_next = next.map(|n| (n.0 - t) as f64);
                    let nearest = match (d_prev, d_next) {
                        (Some(a), Some(b)) => a.min(b),
                        (Some(a), None) => a,
                        (None, Some(b)) => b,
                        (None, None) => f64::INFINITY,
                    };
                    if nearest > limit {
                        continue;
                    }
                    mask[k] = true;
                    vals[k] = match (prev, next) {
                        (_, Some(&(ts, v))) if ts == t => v,
                        (Some((t0, v0)), Some(&(t1, v1))) => {
                            let frac = (t - t0) as f64 / (t1 - t0) as f64;
                            v0 + (v1 - v0) * frac
                        }
                        (Some((_, v0)), None) => v0,
                        (None, Some(&(_, v1))) => v1,
                        (None, None) => unreachable!("nearest is finite"),
                    };
                }
            }
        }
        channels.insert(ch, vals);
        present.insert(ch, mask);
    }
    Ok(AlignedFrame {
        start_ms: start,
        period_ms,
        len,
        channels,
        present,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sid() -> SubjectId {
        SubjectId::new("s1").unwrap()
    }

    fn parse(text: &str, ch: Channel) -> Result<SampleBatch, IngestError> {
        parse_csv(text.as_bytes(), "t.csv", sid(), &ch.default_descriptor())
    }

    #[test]
    fn empty_file_yields_empty_batch() {
        assert!(parse("", Channel::Hr).unwrap().is_empty());
        assert!(parse("ts_ms,value\n", Channel::Hr).unwrap().is_empty());
    }

    #[test]
    fn backwards_timestamp_reports_line() {
        let text = "ts_ms,value\n1,1\n2,1\n3,1\n4,1\n5,1\n4,1\n";
        match parse(text, Channel::Hr) {
            Err(IngestError::NonMonotonicTime { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_nan_bad_rows_and_units() {
        assert!(matches!(
            parse("ts_ms,value\n1,NaN\n", Channel::Hr),
            Err(IngestError::FormatError { line: 2, .. })
        ));
        assert!(matches!(
            parse("ts_ms,value\n1,inf\n", Channel::Hr),
            Err(IngestError::FormatError { line: 2, .. })
        ));
        assert!(matches!(
            parse("ts_ms,value\n1,2,3\n", Channel::Hr),
            Err(IngestError::FormatError { line: 2, .. })
        ));
        assert!(matches!(
            parse("time,value\n", Channel::Hr),
            Err(IngestError::FormatError { line: 1, .. })
        ));
        assert!(matches!(
            parse("ts_ms,value:g\n1,2\n", Channel::Hr),
            Err(IngestError::UnitMismatch { .. })
        ));
        assert_eq!(parse("ts_ms,value:bpm\n1,2\n", Channel::Hr).unwrap().len(), 1);
    }

    #[test]
    fn ema_rows_parse_with_quoted_text() {
        let text = "ts_ms,prompt_kind,positive,negative,free_text\n\
                    10,momentary,60,20,\"felt ok, tired\"\n\
                    20,momentary,,,\n\
                    30,weekly,50,40,\"productive \"\"week\"\"\"\n";
        let b = parse(text, Channel::Ema).unwrap();
        assert_eq!(b.values, vec![1.0, 0.0, 1.0]);
        assert_eq!(b.ema[0].free_text.as_deref(), Some("felt ok, tired"));
        assert!(!b.ema[1].answered());
        assert_eq!(b.ema[2].prompt_kind, EmaRowKind::Weekly);
        assert_eq!(b.ema[2].free_text.as_deref(), Some("productive \"week\""));
        let mut buf = Vec::new();
        write_ema(&mut buf, &b.ema).unwrap();
        let again = parse(std::str::from_utf8(&buf).unwrap(), Channel::Ema).unwrap();
        assert_eq!(again, b);
        assert!(parse("ts_ms,prompt_kind,positive,negative,free_text\n1,momentary,101,2,\n", Channel::Ema).is_err());
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(
            start in 0i64..1_000_000_000_000,
            steps in proptest::collection::vec((1i64..100, -1e6f64..1e6), 0..300),
        ) {
            let mut t = start;
            let mut ts = Vec::new();
            let mut vs = Vec::new();
            for (dt, v) in steps { t += dt; ts.push(t); vs.push(v); }
            let b = SampleBatch::new(sid(), Channel::Ppg.default_descriptor(), ts, vs).unwrap();
            let mut buf = Vec::new();
            write_stream(&mut buf, &b).unwrap();
            let back = parse_csv(&buf[..], "x", sid(), &b.descriptor).unwrap();
            prop_assert_eq!(back, b);
        }
    }

    fn batch(ch: Channel, ts: Vec<i64>, vs: Vec<f64>) -> SampleBatch {
        SampleBatch::new(sid(), ch.default_descriptor(), ts, vs).unwrap()
    }

    fn with_rate(mut b: SampleBatch, rate: f64) -> SampleBatch {
        b.descriptor.nominal_rate_hz = rate;
        b
    }

    #[test]
    fn resampling_on_own_grid_is_identity() {
        let ts: Vec<i64> = (0..100).map(|i| i * 1000).collect();
        let vs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = with_rate(batch(Channel::Gsr, ts, vs.clone()), 1.0);
        let f = align_resample(&[b], 1000, &IngestConfig::default()).unwrap();
        assert_eq!(f.len, 100);
        let got = &f.channels[&Channel::Gsr];
        for (g, v) in got.iter().zip(&vs) {
            assert!((g - v).abs() <= 1e-12);
        }
        assert!(f.present[&Channel::Gsr].iter().all(|p| *p));
    }

    #[test]
    fn ramp_midpoints_are_averages() {
        let ts: Vec<i64> = (0..10).map(|i| i * 1000).collect();
        let vs: Vec<f64> = (0..10).map(|i| 2.0 * i as f64 + 1.0).collect();
        let b = with_rate(batch(Channel::Gsr, ts, vs.clone()), 1.0);
        let f = align_resample(&[b], 500, &IngestConfig::default()).unwrap();
        let got = &f.channels[&Channel::Gsr];
        assert_eq!(got.len(), 19);
        for k in 0..9 {
            assert_eq!(got[2 * k + 1], (vs[k] + vs[k + 1]) / 2.0);
        }
    }

    #[test]
    fn event_channel_carries_forward_within_window() {
        let b = batch(Channel::GpsClass, vec![0, 10 * MINUTE_MS], vec![1.0, 2.0]);
        let f = align_resample(&[b], MINUTE_MS, &IngestConfig::default()).unwrap();
        let mask = &f.present[&Channel::GpsClass];
        let vals = &f.channels[&Channel::GpsClass];
        assert!(mask[..=5].iter().all(|p| *p));
        assert!(!mask[6] && !mask[9]);
        assert!(mask[10] && vals[10] == 2.0 && vals[5] == 1.0);
    }

    #[test]
    fn align_errors() {
        assert!(matches!(
            align_resample(&[], 100, &IngestConfig::default()),
            Err(IngestError::EmptyInput)
        ));
        let a = batch(Channel::Hr, vec![0], vec![1.0]);
        let mut b = a.clone();
        b.subject = SubjectId::new("s2").unwrap();
        assert!(matches!(
            align_resample(&[a.clone(), b], 100, &IngestConfig::default()),
            Err(IngestError::MixedSubjects(..))
        ));
        assert!(matches!(
            align_resample(&[a], 5, &IngestConfig::default()),
            Err(IngestError::PeriodTooSmall(5))
        ));
    }

    /// Independent gap oracle: nearest-sample distance by brute force.
    fn gap_oracle(samples: &[i64], grid: &[i64], limit: f64) -> Vec<bool> {
        grid.iter()
            .map(|&t| {
                let d = samples.iter().map(|&s| (s - t).abs()).min().unwrap();
                (d as f64) <= limit
            })
            .collect()
    }

    #[test]
    fn random_walk_masks_match_gap_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut batches = Vec::new();
            let mut all_ts = Vec::new();
            for (ch, rate) in [(Channel::Gsr, 4.0), (Channel::AccelMag, 1.0)] {
                let period = (1000.0 / rate) as i64;
                let mut t = rng.gen_range(0..5000);
                let mut ts = Vec::new();
                let mut vs = Vec::new();
                let mut x = 0.0;
                while t < 120_000 {
                    ts.push(t);
                    x += rng.gen_range(-1.0..1.0);
                    vs.push(x);
                    t += if rng.gen_bool(0.05) {
                        period * rng.gen_range(3..20)
                    } else {
                        period
                    };
                }
                all_ts.push((ch, ts.clone(), period as f64));
                batches.push(with_rate(batch(ch, ts, vs), rate));
            }
            let f = align_resample(&batches, 100, &IngestConfig::default()).unwrap();
            let grid: Vec<i64> = (0..f.len).map(|i| f.timestamp(i)).collect();
            for (ch, ts, period) in all_ts {
                assert_eq!(f.present[&ch], gap_oracle(&ts, &grid, 2.0 * period));
            }
        }
    }

    #[test]
    fn masked_fraction_grows_as_period_shrinks() {
        let ts: Vec<i64> = (0..=100).filter(|s| !(30..=60).contains(s)).map(|s| s * 1000).collect();
        let vs = vec![1.0; ts.len()];
        let b = with_rate(batch(Channel::Gsr, ts, vs), 1.0);
        let mut last = -1.0;
        for p in [1000, 500, 250, 100, 50, 20, 10] {
            let f = align_resample(std::slice::from_ref(&b), p, &IngestConfig::default()).unwrap();
            let m = f.masked_fraction(Channel::Gsr).unwrap();
            assert!(m >= last, "period {p}: {m} < {last}");
            last = m;
        }
        assert!(last > 0.0);
    }

    #[test]
    fn layout_scan_and_subject_inference() {
        let dir = tempfile::tempdir().unwrap();
        let d = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let p = layout_path(dir.path(), &sid(), d, Channel::Hr);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(&p, "ts_ms,value\n1,60\n2,61\n").unwrap();
        let entries = scan_layout(dir.path()).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].channel, Channel::Hr);
        let b = parse_stream(&p, &Channel::Hr.default_descriptor()).unwrap();
        assert_eq!(b.subject, sid());
        assert_eq!(b.values, vec![60.0, 61.0]);
        fs::write(p.with_file_name("junk.txt"), "x").unwrap();
        assert!(matches!(scan_layout(dir.path()), Err(IngestError::LayoutError(_))));
        assert!(scan_layout(&dir.path().join("missing")).unwrap().is_empty());
    }
}
