//! File-backed session persistence.
//!
//! Each session gets a directory holding `log.jsonl` (a header line, then
//! one line per turn, only ever appended) and `snapshot.json`. The store
//! root also keeps `index.json`, a map from session id to status. Snapshot
//! and index are replaced by write-then-rename.

use dashmap::DashMap;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use thiserror::Error;

use crispr_agent::workflow::{Engine, EngineError, InteractionTurn, Session, SessionHeader, Status};

pub const LOG_FILE: &str = "log.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("session log for `{session}` is unreadable at line {line}")]
    CorruptLog { session: String, line: usize },
    #[error("no stored session `{0}`")]
    UnknownSession(String),
    #[error("replaying `{session}`: {source}")]
    Replay { session: String, source: EngineError },
}

fn io(path: &Path, e: impl ToString) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Header(SessionHeader),
    Turn(Box<InteractionTurn>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub status: Status,
    pub turns: usize,
    #[serde(default)]
    pub needs_review: bool,
}

#[derive(Debug)]
pub struct Recovery {
    pub session: Session,
    /// 1-based log line where reading stopped, when the tail was unreadable.
    pub corrupt_line: Option<usize>,
}

#[derive(Debug)]
pub struct SessionStore {
    root: PathBuf,
    /// Turns already written per session.
    persisted: DashMap<String, usize>,
    index_lock: Mutex<()>,
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io(&tmp, e))?;
    f.sync_all().map_err(|e| io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io(path, e))
}

fn line(record: &LogRecord) -> String {
    let mut s = serde_json::to_string(record).expect("log records serialize");
    s.push('\n');
    s
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io(&root, e))?;
        Ok(Self {
            root,
            persisted: DashMap::new(),
            index_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    pub fn log_path(&self, id: &str) -> PathBuf {
        self.dir(id).join(LOG_FILE)
    }

    /// Appends turns not yet on disk and refreshes the snapshot and index.
    pub fn save(&self, s: &Session) -> Result<(), StoreError> {
        let id = s.id();
        let dir = self.dir(id);
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        let log = self.log_path(id);
        let done = self.persisted.get(id).map(|n| *n);
        let mut text = String::new();
        let from = match done {
            Some(n) => n,
            None if log.exists() => {
                return Err(StoreError::Io {
                    path: log.display().to_string(),
                    message: "log exists for a session this store did not write or recover".into(),
                })
            }
            None => {
                text.push_str(&line(&LogRecord::Header(s.header.clone())));
                0
            }
        };
        for t in &s.history[from.min(s.history.len())..] {
            text.push_str(&line(&LogRecord::Turn(Box::new(t.clone()))));
        }
        if !text.is_empty() {
            let mut f = OpenOptions::new().create(true).append(true).open(&log).map_err(|e| io(&log, e))?;
            f.write_all(text.as_bytes()).map_err(|e| io(&log, e))?;
            f.sync_data().map_err(|e| io(&log, e))?;
        }
        self.persisted.insert(id.to_string(), s.history.len());

        let snap = serde_json::to_vec_pretty(s).expect("sessions serialize");
        write_atomic(&dir.join(SNAPSHOT_FILE), &snap)?;
        self.update_index(
            id,
            IndexEntry {
                status: s.status,
                turns: s.history.len(),
                needs_review: s.needs_review,
            },
        )
    }

    pub fn index(&self) -> Result<BTreeMap<String, IndexEntry>, StoreError> {
        let path = self.root.join(INDEX_FILE);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| io(&path, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(io(&path, e)),
        }
    }

    fn update_index(&self, id: &str, entry: IndexEntry) -> Result<(), StoreError> {
        let _g = self.index_lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut index = self.index()?;
        index.insert(id.to_string(), entry);
        let bytes = serde_json::to_vec_pretty(&index).expect("index serializes");
        write_atomic(&self.root.join(INDEX_FILE), &bytes)
    }

    /// Session ids with a log on disk, sorted.
    pub fn ids(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(|e| io(&self.root, e))? {
            let entry = entry.map_err(|e| io(&self.root, e))?;
            if entry.path().join(LOG_FILE).exists() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Rebuilds a session by replaying its log. Reading stops at the first
    /// unreadable line; the session is then flagged for review, the damaged
    /// log is kept beside a rewritten one, and later turns append cleanly.
    pub fn recover(&self, id: &str, engine: &Engine) -> Result<Recovery, StoreError> {
        let path = self.log_path(id);
        if !path.exists() {
            return Err(StoreError::UnknownSession(id.to_string()));
        }
        let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
        let mut lines = text.split_inclusive('\n').enumerate();
        let header = match lines.next().map(|(_, l)| serde_json::from_str::<LogRecord>(l.trim_end())) {
            Some(Ok(LogRecord::Header(h))) => h,
            _ => {
                return Err(StoreError::CorruptLog {
                    session: id.to_string(),
                    line: 1,
                })
            }
        };
        let mut turns = Vec::new();
        let mut corrupt_line = None;
        for (i, raw) in lines {
            match serde_json::from_str::<LogRecord>(raw.trim_end()) {
                Ok(LogRecord::Turn(t)) if raw.ends_with('\n') => turns.push(*t),
                _ => {
                    corrupt_line = Some(i + 1);
                    break;
                }
            }
        }
        let mut session = engine.replay(header, &turns).map_err(|source| StoreError::Replay {
            session: id.to_string(),
            source,
        })?;
        let flagged = self.index()?.get(id).is_some_and(|e| e.needs_review);
        session.needs_review = corrupt_line.is_some() || flagged;

        if let Some(line) = corrupt_line {
            let aside = self.dir(id).join(format!("log.corrupt-{line}.jsonl"));
            fs::rename(&path, &aside).map_err(|e| io(&aside, e))?;
            let mut fresh = line_for_header(&session);
            for t in &session.history {
                fresh.push_str(&self::line(&LogRecord::Turn(Box::new(t.clone()))));
            }
            write_atomic(&path, fresh.as_bytes())?;
        }
        self.persisted.insert(id.to_string(), session.history.len());
        self.save(&session)?;
        Ok(Recovery { session, corrupt_line })
    }
}

fn line_for_header(s: &Session) -> String {
    line(&LogRecord::Header(s.header.clone()))
}
