//! Append-only JSON-lines session logs.
//!
//! Each line is `{"seq": n, "commit": bool, "event": {...}}`. One command can
//! emit several events (an answer followed by `complete`, say); they are
//! written together and only the last carries `"commit": true`. Recovery
//! replays up to the last committed line and drops anything after it, so a
//! crash mid-write never leaves a half-applied command behind.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srta_core::session::SessionError;
use srta_core::{Session, SessionEvent};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log io: {0}")]
    Io(#[from] std::io::Error),
    #[error("log line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("log holds no committed start event")]
    Empty,
    #[error("log line {line}: {source}")]
    Replay { line: usize, source: SessionError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogEntry {
    pub seq: u64,
    pub commit: bool,
    pub event: SessionEvent,
}

/// Renders one command's events as log lines starting at `seq`.
pub fn encode_batch(seq: u64, events: &[SessionEvent]) -> String {
    let mut out = String::new();
    for (i, event) in events.iter().enumerate() {
        let entry = LogEntry {
            seq: seq + i as u64,
            commit: i + 1 == events.len(),
            event: event.clone(),
        };
        out.push_str(&serde_json::to_string(&entry).expect("log entry serializes"));
        out.push('\n');
    }
    out
}

/// State rebuilt from a log.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub session: Session,
    /// Committed entries, in order.
    pub events: Vec<SessionEvent>,
    /// Byte length of the committed prefix.
    pub committed_len: usize,
}

/// Replays the committed prefix of `text`. A final line that does not parse
/// is treated as a torn write only when it lacks its trailing newline.
pub fn recover(text: &str) -> Result<Recovered, LogError> {
    let mut pending: Vec<SessionEvent> = Vec::new();
    let mut committed: Option<Recovered> = None;
    let mut session: Option<Session> = None;
    let mut offset = 0;
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        let line = i + 1;
        offset += raw.len();
        let complete = raw.ends_with('\n');
        let entry: LogEntry = match serde_json::from_str(raw.trim_end()) {
            Ok(e) => e,
            Err(_) if !complete => break,
            Err(e) => {
                return Err(LogError::Line {
                    line,
                    message: e.to_string(),
                })
            }
        };
        if !complete {
            break;
        }
        let expected = committed.as_ref().map_or(0, |c| c.events.len()) + pending.len();
        if entry.seq != expected as u64 {
            return Err(LogError::Line {
                line,
                message: format!("expected seq {expected}, found {}", entry.seq),
            });
        }
        let replay = |source| LogError::Replay { line, source };
        match session.as_mut() {
            None => session = Some(Session::replay([&entry.event]).map_err(replay)?),
            Some(s) => s.apply(&entry.event).map_err(replay)?,
        }
        pending.push(entry.event);
        if entry.commit {
            let mut events = committed.take().map(|c| c.events).unwrap_or_default();
            events.append(&mut pending);
            committed = Some(Recovered {
                session: session.clone().expect("session exists after first entry"),
                events,
                committed_len: offset,
            });
        }
    }
    committed.ok_or(LogError::Empty)
}

/// An open log file positioned for appends.
#[derive(Debug)]
pub struct SessionLog {
    path: PathBuf,
    file: File,
    next_seq: u64,
}

impl SessionLog {
    /// Creates a new log holding `start`; fails if the file exists.
    pub fn create(path: &Path, start: &SessionEvent) -> Result<SessionLog, LogError> {
        let file = OpenOptions::new().create_new(true).append(true).open(path)?;
        let mut log = SessionLog {
            path: path.to_path_buf(),
            file,
            next_seq: 0,
        };
        log.append(std::slice::from_ref(start))?;
        Ok(log)
    }

    /// Recovers an existing log and cuts off any uncommitted tail.
    pub fn open(path: &Path) -> Result<(SessionLog, Recovered), LogError> {
        let text = std::fs::read_to_string(path)?;
        let recovered = recover(&text)?;
        let file = OpenOptions::new().append(true).open(path)?;
        if recovered.committed_len < text.len() {
            file.set_len(recovered.committed_len as u64)?;
            file.sync_data()?;
        }
        let log = SessionLog {
            path: path.to_path_buf(),
            file,
            next_seq: recovered.events.len() as u64,
        };
        Ok((log, recovered))
    }

    /// Writes one command's events and syncs them to disk.
    pub fn append(&mut self, events: &[SessionEvent]) -> Result<(), LogError> {
        if events.is_empty() {
            return Ok(());
        }
        self.file.write_all(encode_batch(self.next_seq, events).as_bytes())?;
        self.file.sync_data()?;
        self.next_seq += events.len() as u64;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> u64 {
        self.next_seq
    }

    pub fn is_empty(&self) -> bool {
        self.next_seq == 0
    }
}
