//! Append-only request journal and the persisted-state hash.
//!
//! Every accepted mutation is written as one JSON line before its response
//! is returned. Replaying the lines in order against an empty data
//! directory rebuilds the same files byte for byte.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mhn_core::ingest::SampleBatch;
use mhn_core::personal_model::ProfileContext;
use mhn_core::time::EpochMs;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ServiceError;
use crate::model::{EventInput, GoalRequest, GuidanceRequest};

pub const JOURNAL_FILE: &str = "journal.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Ingest { batch: SampleBatch },
    /// Closes the subject's open day.
    Flush { subject: String },
    SetProfile { subject: String, context: ProfileContext },
    AddEvent { subject: String, event: EventInput },
    Goal { subject: String, request: GoalRequest },
    Guidance { subject: String, request: GuidanceRequest, created_by: String },
    AckAlert { id: String },
}

impl Command {
    /// Subject whose lock the command runs under.
    pub fn subject(&self) -> Option<&str> {
        match self {
            Command::Ingest { batch } => Some(batch.subject.as_str()),
            Command::Flush { subject }
            | Command::SetProfile { subject, .. }
            | Command::AddEvent { subject, .. }
            | Command::Goal { subject, .. }
            | Command::Guidance { subject, .. } => Some(subject),
            Command::AckAlert { id } => id.rsplit_once('-').map(|(s, _)| s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub seq: u64,
    /// Wall-clock receipt time; replay reuses it.
    pub ts: EpochMs,
    pub command: Command,
}

pub struct Journal {
    path: PathBuf,
    out: BufWriter<File>,
    next_seq: u64,
}

impl Journal {
    /// Opens for appending, continuing after the last existing entry.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref().to_path_buf();
        let next_seq = if path.exists() { read_entries(&path)?.last().map_or(1, |e| e.seq + 1) } else { 1 };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Journal { path, out: BufWriter::new(file), next_seq })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, ts: EpochMs, command: &Command) -> Result<u64, ServiceError> {
        let seq = self.next_seq;
        #[derive(Serialize)]
        struct Line<'a> {
            seq: u64,
            ts: EpochMs,
            command: &'a Command,
        }
        serde_json::to_writer(&mut self.out, &Line { seq, ts, command })
            .map_err(|e| ServiceError::Journal(e.to_string()))?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.next_seq += 1;
        Ok(seq)
    }
}

pub fn read_entries(path: &Path) -> Result<Vec<JournalEntry>, ServiceError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: JournalEntry = serde_json::from_str(&line)
            .map_err(|e| ServiceError::Journal(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(e);
    }
    Ok(out)
}

/// SHA-256 over every persisted file under `dir` except the journal, in
/// path order. Each file contributes its relative path and its bytes.
pub fn state_hash(dir: &Path) -> Result<String, ServiceError> {
    let mut h = Sha256::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| ServiceError::Io(e.into()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).expect("walk stays under root");
        if rel == Path::new(JOURNAL_FILE) {
            continue;
        }
        let rel = rel.to_string_lossy().replace('\\', "/");
        h.update((rel.len() as u64).to_le_bytes());
        h.update(rel.as_bytes());
        let bytes = std::fs::read(entry.path())?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}
