//! Single-file append-only event log. State is the fold of its events.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use narrachart::render::{EditOp, LayeredChartSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FeedbackEntry, NarrativeBinding, Project};

// Events are written once and folded once; variant size does not matter.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    ProjectCreated {
        project: Project,
    },
    /// A narrative was (re)bound; its chart spec restarts without edits.
    Bound {
        project_id: String,
        narrative_id: String,
        binding: Option<NarrativeBinding>,
        error: Option<String>,
        spec: Option<LayeredChartSpec>,
    },
    Edited {
        project_id: String,
        narrative_id: String,
        op: EditOp,
    },
    Feedback {
        entry: FeedbackEntry,
    },
    /// Stored outcome of a request sent with an idempotency key.
    Response {
        key: String,
        fingerprint: String,
        status: u16,
        body: serde_json::Value,
    },
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt store line {line}: {detail}")]
    Corrupt { line: usize, detail: String },
}

pub struct Store {
    path: Option<PathBuf>,
    file: Mutex<Option<File>>,
}

impl Store {
    /// A store that keeps nothing on disk.
    pub fn memory() -> Self {
        Self {
            path: None,
            file: Mutex::new(None),
        }
    }

    /// Opens or creates the log and returns its events. A truncated final
    /// line (an interrupted append) is dropped; any other bad line is an error.
    pub fn open(path: &Path) -> Result<(Self, Vec<Event>), StoreError> {
        let mut events = Vec::new();
        let text = if path.exists() { std::fs::read_to_string(path)? } else { String::new() };
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        let mut valid = 0;
        for (i, line) in lines.iter().enumerate() {
            if !line.trim().is_empty() {
                match serde_json::from_str(line) {
                    Ok(e) => events.push(e),
                    Err(_) if i + 1 == lines.len() => break,
                    Err(e) => {
                        return Err(StoreError::Corrupt {
                            line: i + 1,
                            detail: e.to_string(),
                        })
                    }
                }
            }
            valid += line.len();
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if valid < text.len() {
            file.set_len(valid as u64)?;
        } else if !text.is_empty() && !text.ends_with('\n') {
            file.write_all(b"\n")?;
        }
        Ok((
            Self {
                path: Some(path.to_path_buf()),
                file: Mutex::new(Some(file)),
            },
            events,
        ))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Writes one event as one line and flushes it.
    pub fn append(&self, event: &Event) -> Result<(), StoreError> {
        let mut guard = self.file.lock().expect("store file lock");
        if let Some(f) = guard.as_mut() {
            let mut line = serde_json::to_string(event).expect("events serialize");
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(status: u16) -> Event {
        Event::Response {
            key: "k".into(),
            fingerprint: "f".into(),
            status,
            body: serde_json::json!({"ok": true}),
        }
    }

    #[test]
    fn events_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let (store, events) = Store::open(&path).unwrap();
        assert!(events.is_empty());
        store.append(&response(200)).unwrap();
        store.append(&response(201)).unwrap();
        drop(store);
        let (_, events) = Store::open(&path).unwrap();
        assert_eq!(events, vec![response(200), response(201)]);
    }

    #[test]
    fn truncated_tail_is_dropped_but_corrupt_middle_is_not() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let good = serde_json::to_string(&response(200)).unwrap();
        std::fs::write(&path, format!("{good}\n{{\"event\":\"resp")).unwrap();
        let (store, events) = Store::open(&path).unwrap();
        assert_eq!(events.len(), 1);
        store.append(&response(202)).unwrap();
        drop(store);
        assert_eq!(Store::open(&path).unwrap().1, vec![response(200), response(202)]);
        std::fs::write(&path, format!("garbage\n{good}\n")).unwrap();
        assert!(matches!(Store::open(&path), Err(StoreError::Corrupt { line: 1, .. })));
    }
}
