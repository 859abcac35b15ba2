//! Mark feedback awaiting expert review, and its promotion into the prompt
//! example database. Promotion is a separate, human-approved step.

use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use narrachart::binder::{append_examples, PromptDb, PromptDbError, PromptExample};
use narrachart::VocabSpan;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One marked text-data pair. `expected_output` is a wire document that
/// validates against the table rebuilt from `table_digest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CurationRecord {
    pub id: String,
    pub timestamp: u64,
    pub project_id: String,
    pub narrative_id: String,
    pub text: String,
    pub table_digest: String,
    pub marked: VocabSpan,
    pub expected_output: String,
}

impl CurationRecord {
    pub fn to_example(&self) -> PromptExample {
        PromptExample {
            id: format!("curated-{}", self.id),
            input_text: self.text.clone(),
            table_digest: self.table_digest.clone(),
            expected_output: self.expected_output.clone(),
            reasoning: String::new(),
            feature_vector: Default::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("curation file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("curation file line {line}: {detail}")]
    Invalid { line: usize, detail: String },
    #[error(transparent)]
    Db(#[from] PromptDbError),
}

/// Append-only curation file; in memory when no path is given.
pub struct CurationLog {
    path: Option<PathBuf>,
    memory: Mutex<Vec<CurationRecord>>,
}

impl CurationLog {
    pub fn new(path: Option<PathBuf>) -> Self {
        Self {
            path,
            memory: Mutex::new(Vec::new()),
        }
    }

    pub fn append(&self, record: &CurationRecord) -> Result<(), CurationError> {
        let mut memory = self.memory.lock().expect("curation lock");
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(f, "{}", serde_json::to_string(record).expect("records serialize"))?;
        }
        memory.push(record.clone());
        Ok(())
    }

    /// Records appended through this handle.
    pub fn appended(&self) -> Vec<CurationRecord> {
        self.memory.lock().expect("curation lock").clone()
    }
}

pub fn read_curation(path: &Path) -> Result<Vec<CurationRecord>, CurationError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CurationError::Invalid {
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

/// Which curation entries a reviewer accepted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Approval {
    All,
    Ids(BTreeSet<String>),
}

impl Approval {
    fn accepts(&self, id: &str) -> bool {
        match self {
            Approval::All => true,
            Approval::Ids(ids) => ids.contains(id),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PromoteReport {
    pub promoted: Vec<String>,
    /// `(entry id, reason)` for approved entries that were not added.
    pub skipped: Vec<(String, String)>,
}

/// Appends approved entries to the database file, skipping duplicates and
/// entries that fail the example invariant. The database must validate
/// before and after.
pub fn promote(curation: &Path, db_path: &Path, approval: &Approval) -> Result<PromoteReport, CurationError> {
    let records = read_curation(curation)?;
    let db = if db_path.exists() { PromptDb::load(db_path)? } else { PromptDb::default() };
    let mut seen: Vec<(String, String, String)> = db
        .examples()
        .iter()
        .map(|e| (e.input_text.clone(), e.table_digest.clone(), e.expected_output.clone()))
        .collect();
    let mut report = PromoteReport::default();
    let mut fresh = Vec::new();
    for r in records.iter().filter(|r| approval.accepts(&r.id)) {
        let ex = r.to_example();
        let key = (ex.input_text.clone(), ex.table_digest.clone(), ex.expected_output.clone());
        if db.contains_id(&ex.id) || seen.contains(&key) {
            report.skipped.push((r.id.clone(), "duplicate of an existing example".into()));
            continue;
        }
        let v = ex.violations();
        if !v.is_empty() {
            report.skipped.push((r.id.clone(), v.join("; ")));
            continue;
        }
        seen.push(key);
        report.promoted.push(r.id.clone());
        fresh.push(ex);
    }
    if !fresh.is_empty() {
        append_examples(db_path, &fresh)?;
        PromptDb::load(db_path)?;
    }
    Ok(report)
}
