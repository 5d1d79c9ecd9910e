//! Append-only stage journal: one JSON record per line, last record per
//! stage wins. The journal is the source of truth for resume decisions and
//! for the cumulative accounting identity
//! `running_total(n) == running_total(n-1) + produced(n) - duplicates(n)`.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const JOURNAL_FILE: &str = "journal.jsonl";

/// The five stages that contribute names to the cumulative allowlist, in
/// canonical merge order.
pub const SOURCE_STAGES: [&str; 5] = [
    "mine-maven",
    "crawl-google",
    "resolve-deps",
    "mine-gradle",
    "crawl-portal",
];

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal io: {0}")]
    Io(#[from] std::io::Error),
    #[error("journal record is not valid json: {0}")]
    Malformed(#[from] serde_json::Error),
}

/// One attempt at one stage. `output` is the file name inside the journal
/// directory; `completed == false` marks a failed attempt that resume must
/// redo.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub inputs_digest: String,
    pub output: String,
    pub produced: u64,
    pub duplicates: u64,
    pub running_total: u64,
    pub started_ms: u64,
    pub finished_ms: u64,
    pub completed: bool,
}

#[derive(Debug)]
pub struct Journal {
    dir: PathBuf,
    records: Vec<StageRecord>,
}

impl Journal {
    /// Loads the journal in `dir`, creating the directory if needed. A
    /// trailing malformed line (torn write from a crash) is dropped with a
    /// warning; malformed lines elsewhere are an error.
    pub fn open(dir: &Path) -> Result<Journal, JournalError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(JOURNAL_FILE);
        let mut records = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
            for (index, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<StageRecord>(line) {
                    Ok(record) => records.push(record),
                    Err(err) if index + 1 == lines.len() => {
                        log::warn!("dropping torn journal line {}: {err}", index + 1);
                    }
                    Err(err) => return Err(JournalError::Malformed(err)),
                }
            }
        }
        Ok(Journal {
            dir: dir.to_path_buf(),
            records,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self) -> PathBuf {
        self.dir.join(JOURNAL_FILE)
    }

    pub fn records(&self) -> &[StageRecord] {
        &self.records
    }

    /// Last record for `stage`, completed or not.
    pub fn last(&self, stage: &str) -> Option<&StageRecord> {
        self.records.iter().rev().find(|r| r.stage == stage)
    }

    pub fn last_completed(&self, stage: &str) -> Option<&StageRecord> {
        self.records
            .iter()
            .rev()
            .find(|r| r.stage == stage && r.completed)
    }

    /// Running total after the most recent completed stage (0 for a fresh
    /// journal). Failed attempts never advance the total.
    pub fn running_total(&self) -> u64 {
        self.records
            .iter()
            .rev()
            .find(|r| r.completed)
            .map(|r| r.running_total)
            .unwrap_or(0)
    }

    /// Source stages with a completed record, in the order their most
    /// recent completed record appears in the journal.
    pub fn completed_source_stages(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for record in &self.records {
            if !record.completed || !SOURCE_STAGES.contains(&record.stage.as_str()) {
                continue;
            }
            seen.retain(|s: &String| s != &record.stage);
            seen.push(record.stage.clone());
        }
        seen
    }

    /// Appends one record and flushes it before returning.
    pub fn append(&mut self, record: StageRecord) -> Result<(), JournalError> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.path())?;
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.flush()?;
        self.records.push(record);
        Ok(())
    }
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Writes `bytes` to `path` atomically: a `.part` sibling is written first
/// and renamed into place, so readers never observe a torn file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let staging = path.with_extension("part");
    fs::write(&staging, bytes)?;
    fs::rename(&staging, path)
}

/// Stage-input identity: file contents plus non-file parameters, hashed in
/// the order they were added. Any content or parameter change produces a
/// different digest, which invalidates downstream cached stages.
#[derive(Debug, Default)]
pub struct InputDigest {
    manifest: Vec<String>,
}

impl InputDigest {
    pub fn new() -> InputDigest {
        InputDigest::default()
    }

    pub fn file(mut self, path: &Path) -> std::io::Result<InputDigest> {
        let bytes = fs::read(path)?;
        let digest = hex::encode(Sha256::digest(&bytes));
        self.manifest.push(format!("file {} {digest}", path.display()));
        Ok(self)
    }

    pub fn param(mut self, key: &str, value: impl std::fmt::Display) -> InputDigest {
        self.manifest.push(format!("param {key}={value}"));
        self
    }

    pub fn finish(self) -> String {
        hex::encode(Sha256::digest(self.manifest.join("\n").as_bytes()))
    }
}
