//! Writing a cohort to the ingest layout, reading the ledger back, and
//! replaying a data directory in timestamp order.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::day::{generate_day, DayTruth};
use super::{CohortConfig, SimError};
use crate::chronicle::SubjectId;
use crate::estimator::Phase;
use crate::ingest::{self, Channel, SampleBatch};
use crate::time::{self, EpochMs};

pub const LEDGER_FILE: &str = "ledger.json";
pub const LEDGER_BEATS: &str = "ledger_beats.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectTruth {
    pub subject: SubjectId,
    /// Phase of every day.
    pub regimes: Vec<Phase>,
    pub days: Vec<DayTruth>,
}

impl SubjectTruth {
    pub fn beats(&self) -> impl Iterator<Item = f64> + '_ {
        self.days.iter().flat_map(|d| d.beats.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLedger {
    pub config: CohortConfig,
    pub subjects: Vec<SubjectTruth>,
}

impl GroundTruthLedger {
    pub fn subject(&self, id: &str) -> Option<&SubjectTruth> {
        self.subjects.iter().find(|s| s.subject.as_str() == id)
    }
}

fn write_batch(root: &Path, batch: &SampleBatch, tz: Tz) -> Result<PathBuf, SimError> {
    let date = time::local_date(batch.first_ts().unwrap_or(0), tz);
    let path = ingest::layout_path(root, &batch.subject, date, batch.channel());
    fs::create_dir_all(path.parent().expect("layout paths have parents"))?;
    let file = File::create(&path)?;
    if batch.channel() == Channel::Ema {
        ingest::write_ema(file, &batch.ema)?;
    } else {
        ingest::write_stream(file, batch)?;
    }
    Ok(path)
}

/// Generates every subject-day into `out` and writes the ledger next to the
/// subject directories. Subjects are generated on separate threads.
pub fn generate(cfg: &CohortConfig, out: &Path) -> Result<GroundTruthLedger, SimError> {
    cfg.validate()?;
    let tz = time::parse_tz(&cfg.timezone).expect("validated timezone");
    fs::create_dir_all(out)?;
    let results: Vec<Result<(SubjectTruth, String), SimError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.subjects)
            .map(|s| {
                scope.spawn(move || -> Result<(SubjectTruth, String), SimError> {
                    let subject = cfg.subject_id(s);
                    let mut days = Vec::with_capacity(cfg.days);
                    let mut beats = String::new();
                    for d in 0..cfg.days {
                        let day = generate_day(cfg, s, d)?;
                        for b in &day.batches {
                            write_batch(out, b, tz)?;
                        }
                        for t in &day.truth.beats {
                            beats.push_str(&format!("{},{t:.3}\n", subject.as_str()));
                        }
                        days.push(day.truth);
                    }
                    let regimes = days.iter().map(|d| d.phase).collect();
                    Ok((SubjectTruth { subject, regimes, days }, beats))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("generator thread panicked")).collect()
    });
    let mut subjects = Vec::new();
    let mut beats = BufWriter::new(File::create(out.join(LEDGER_BEATS))?);
    writeln!(beats, "subject,t_ms")?;
    for r in results {
        let (truth, lines) = r?;
        beats.write_all(lines.as_bytes())?;
        subjects.push(truth);
    }
    beats.flush()?;
    let ledger = GroundTruthLedger { config: cfg.clone(), subjects };
    let text = serde_json::to_string_pretty(&ledger).map_err(|e| SimError::Ledger(e.to_string()))?;
    fs::write(out.join(LEDGER_FILE), text)?;
    Ok(ledger)
}

/// Loads `ledger.json` and reattaches the beat times.
pub fn read_ledger(dir: &Path) -> Result<GroundTruthLedger, SimError> {
    let text = fs::read_to_string(dir.join(LEDGER_FILE))?;
    let mut ledger: GroundTruthLedger = serde_json::from_str(&text).map_err(|e| SimError::Ledger(e.to_string()))?;
    let tz = time::parse_tz(&ledger.config.timezone).unwrap_or(chrono_tz::UTC);
    let beats = BufReader::new(File::open(dir.join(LEDGER_BEATS))?);
    for (n, line) in beats.lines().enumerate().skip(1) {
        let line = line?;
        let bad = || SimError::Ledger(format!("{LEDGER_BEATS}:{}: malformed row", n + 1));
        let (subject, t) = line.split_once(',').ok_or_else(bad)?;
        let t: f64 = t.parse().map_err(|_| bad())?;
        let date = time::local_date(t as EpochMs, tz);
        let day = ledger
            .subjects
            .iter_mut()
            .find(|s| s.subject.as_str() == subject)
            .and_then(|s| s.days.iter_mut().find(|d| d.date == date))
            .ok_or_else(bad)?;
        day.beats.push(t);
    }
    Ok(ledger)
}

fn first_timestamp(path: &Path) -> Result<Option<EpochMs>, SimError> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    lines.next().transpose()?;
    let Some(line) = lines.next().transpose()? else { return Ok(None) };
    let field = line.split(',').next().unwrap_or("").trim_matches('"');
    Ok(field.parse().ok())
}

/// Feeds every stream file under `data` to `sink` ordered by each batch's
/// first timestamp, with subject and channel as tie-breaks. `speed` scales
/// the pacing relative to data time; `0` delivers as fast as possible.
/// Returns the number of batches delivered.
pub fn replay<F>(data: &Path, speed: f64, mut sink: F) -> Result<usize, SimError>
where
    F: FnMut(SampleBatch) -> Result<(), SimError>,
{
    let entries = ingest::scan_layout(data)?;
    let mut keyed = Vec::with_capacity(entries.len());
    for e in entries {
        let first = first_timestamp(&e.path)?.unwrap_or(EpochMs::MAX);
        keyed.push((first, e));
    }
    keyed.sort_by(|a, b| {
        (a.0, &a.1.subject, a.1.channel, a.1.date).cmp(&(b.0, &b.1.subject, b.1.channel, b.1.date))
    });
    let mut last: Option<EpochMs> = None;
    let mut n = 0;
    for (first, e) in keyed {
        if speed > 0.0 {
            if let (Some(prev), true) = (last, first != EpochMs::MAX) {
                let wait = ((first - prev).max(0) as f64 / speed) as u64;
                std::thread::sleep(Duration::from_millis(wait.min(60_000)));
            }
        }
        if first != EpochMs::MAX {
            last = Some(first);
        }
        let batch = ingest::parse_stream_for(&e.path, e.subject.clone(), &e.channel.default_descriptor())?;
        sink(batch)?;
        n += 1;
    }
    Ok(n)
}

/// Replay target that writes batches back into the ingest layout.
pub struct DirectorySink {
    pub root: PathBuf,
    pub tz: Tz,
}

impl DirectorySink {
    pub fn new(root: impl Into<PathBuf>, tz: Tz) -> Self {
        DirectorySink { root: root.into(), tz }
    }

    pub fn deliver(&mut self, batch: SampleBatch) -> Result<(), SimError> {
        write_batch(&self.root, &batch, self.tz).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physio::{detect_beats, PhysioConfig};

    fn tiny() -> CohortConfig {
        CohortConfig { days: 2, subjects: 2, physio_window_s: 120, ..Default::default() }
    }

    fn digest(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut out = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in fs::read_dir(d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn same_seed_same_bytes() {
        let cfg = CohortConfig { days: 1, subjects: 1, ..Default::default() };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        generate(&cfg, a.path()).unwrap();
        generate(&cfg, b.path()).unwrap();
        assert_eq!(digest(a.path()), digest(b.path()));
    }

    #[test]
    fn ledger_round_trips_with_beats() {
        let dir = tempfile::tempdir().unwrap();
        let ledger = generate(&tiny(), dir.path()).unwrap();
        let back = read_ledger(dir.path()).unwrap();
        assert_eq!(back.subjects.len(), 2);
        for (a, b) in ledger.subjects.iter().zip(&back.subjects) {
            assert_eq!(a.days.len(), b.days.len());
            let (x, y): (Vec<f64>, Vec<f64>) = (a.beats().collect(), b.beats().collect());
            assert_eq!(x.len(), y.len());
            assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-3));
        }
    }

    #[test]
    fn written_ppg_round_trips_and_matches_beats() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        generate(&cfg, dir.path()).unwrap();
        let day = generate_day(&cfg, 0, 0).unwrap();
        let path = ingest::layout_path(dir.path(), &day.subject, day.truth.date, Channel::Ppg);
        let parsed = ingest::parse_stream(&path, &Channel::Ppg.default_descriptor()).unwrap();
        assert_eq!(parsed.timestamps, day.batches[0].timestamps);
        assert_eq!(parsed.values, day.batches[0].values);
        // First window only, recovered against the ledger.
        let [a, b] = day.truth.physio_windows[0];
        let k = parsed.timestamps.partition_point(|t| *t < b);
        let win = SampleBatch::new(
            day.subject.clone(),
            Channel::Ppg.default_descriptor(),
            parsed.timestamps[..k].to_vec(),
            parsed.values[..k].to_vec(),
        )
        .unwrap();
        let got = detect_beats(&win, &PhysioConfig::default()).unwrap();
        let truth: Vec<f64> = day.truth.beats.iter().copied().filter(|t| *t >= a as f64 && *t < b as f64).collect();
        let hit = truth.iter().filter(|t| got.beat_times.iter().any(|g| (g - *t).abs() <= 40.0)).count();
        assert!(hit as f64 >= 0.97 * truth.len() as f64, "{hit}/{}", truth.len());
    }

    #[test]
    fn replay_orders_by_timestamp() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        generate(&cfg, dir.path()).unwrap();
        let mut firsts = Vec::new();
        let n = replay(dir.path(), 0.0, |b| {
            firsts.push(b.first_ts().unwrap());
            Ok(())
        })
        .unwrap();
        assert_eq!(n, 2 * 2 * 8);
        assert!(firsts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn empty_directory_replays_nothing() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(replay(dir.path(), 0.0, |_| Ok(())).unwrap(), 0);
        assert_eq!(replay(&dir.path().join("missing"), 0.0, |_| Ok(())).unwrap(), 0);
    }

    #[test]
    fn directory_sink_reproduces_the_layout() {
        let (src, dst) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let cfg = CohortConfig { days: 1, subjects: 1, physio_window_s: 120, ..Default::default() };
        generate(&cfg, src.path()).unwrap();
        let mut sink = DirectorySink::new(dst.path(), chrono_tz::UTC);
        replay(src.path(), 0.0, |b| sink.deliver(b)).unwrap();
        let strip = |v: Vec<(String, Vec<u8>)>| -> Vec<(String, Vec<u8>)> {
            v.into_iter().filter(|(p, _)| !p.starts_with("ledger")).collect()
        };
        assert_eq!(strip(digest(src.path())), strip(digest(dst.path())));
    }
}
