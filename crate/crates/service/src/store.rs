//! Append-only JSONL event log with periodic snapshots.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use winofusion_core::collab::{Event, Platform, PlatformConfig};

pub const LOG_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const CORRUPT_FILE: &str = "events.corrupt.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub ts: DateTime<Utc>,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub seq: u64,
    pub state: Platform,
}

/// Where replay stopped on a bad line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Halt {
    /// 1-based line number in the log.
    pub line: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Restored {
    pub platform: Platform,
    pub last_seq: u64,
    /// Bytes of the log that replayed cleanly.
    pub valid_len: usize,
    pub halt: Option<Halt>,
}

/// Rebuilds state from an optional snapshot plus the log. Records at or
/// below the snapshot sequence are skipped; replay stops at the first line
/// that does not parse or breaks the sequence.
pub fn restore(log: &str, snapshot: Option<Snapshot>, config: &PlatformConfig) -> Restored {
    let (mut platform, mut last_seq) = match snapshot {
        Some(s) => (s.state.with_config(config.clone()), s.seq),
        None => (Platform::new(config.clone()), 0),
    };
    let mut valid_len = 0;
    let mut expected = 1;
    for (i, line) in log.split_inclusive('\n').enumerate() {
        let halt = |error: String| Some(Halt { line: i + 1, error });
        if !line.ends_with('\n') {
            return Restored { platform, last_seq, valid_len, halt: halt("incomplete last line".into()) };
        }
        let rec: EventRecord = match serde_json::from_str(line.trim_end()) {
            Ok(r) => r,
            Err(e) => return Restored { platform, last_seq, valid_len, halt: halt(e.to_string()) },
        };
        if rec.seq != expected {
            let error = format!("sequence {} where {expected} was expected", rec.seq);
            return Restored { platform, last_seq, valid_len, halt: halt(error) };
        }
        expected += 1;
        if rec.seq > last_seq {
            platform.apply(&rec.event);
            last_seq = rec.seq;
        }
        valid_len += line.len();
    }
    Restored { platform, last_seq, valid_len, halt: None }
}

pub struct EventStore {
    dir: PathBuf,
    log: File,
    snapshot_every: u64,
}

impl EventStore {
    /// Opens or creates the store in `dir` and restores its state. A bad
    /// tail is moved aside so appends continue from the last valid record.
    pub fn open(dir: &Path, snapshot_every: u64, config: &PlatformConfig) -> io::Result<(EventStore, Restored)> {
        fs::create_dir_all(dir)?;
        let log_path = dir.join(LOG_FILE);
        let text = match fs::read(&log_path) {
            Ok(bytes) => String::from_utf8_lossy(&bytes).into_owned(),
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e),
        };
        let snapshot = match fs::read(dir.join(SNAPSHOT_FILE)) {
            Ok(bytes) => Some(
                serde_json::from_slice::<Snapshot>(&bytes)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("snapshot: {e}")))?,
            ),
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(e),
        };
        let restored = restore(&text, snapshot, config);
        if let Some(h) = &restored.halt {
            warn!("event log line {}: {}; keeping {} events", h.line, h.error, restored.last_seq);
            fs::write(dir.join(CORRUPT_FILE), &text.as_bytes()[restored.valid_len..])?;
            let f = OpenOptions::new().write(true).open(&log_path)?;
            f.set_len(restored.valid_len as u64)?;
        }
        info!("restored {} events from {}", restored.last_seq, dir.display());
        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        Ok((EventStore { dir: dir.to_path_buf(), log, snapshot_every }, restored))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Appends and flushes one record.
    pub fn append(&mut self, record: &EventRecord) -> io::Result<()> {
        let mut line = serde_json::to_string(record).map_err(io::Error::other)?;
        line.push('\n');
        self.log.write_all(line.as_bytes())?;
        self.log.flush()
    }

    pub fn snapshot_due(&self, seq: u64) -> bool {
        seq.is_multiple_of(self.snapshot_every)
    }

    /// Writes the snapshot atomically through a temporary file.
    pub fn write_snapshot(&self, seq: u64, state: &Platform) -> io::Result<()> {
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let body = serde_json::to_vec(&SnapshotRef { seq, state }).map_err(io::Error::other)?;
        fs::write(&tmp, body)?;
        fs::rename(tmp, self.dir.join(SNAPSHOT_FILE))
    }
}

#[derive(Serialize)]
struct SnapshotRef<'a> {
    seq: u64,
    state: &'a Platform,
}
