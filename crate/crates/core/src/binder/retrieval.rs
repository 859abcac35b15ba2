//! Few-shot example store and TF-IDF retrieval.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::text::word_tokens;
use crate::binding::validate_binding;
use crate::table::DataTable;
use crate::wire::parse_wire;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptExample {
    pub id: String,
    pub input_text: String,
    pub table_digest: String,
    /// Binding document in wire form, `Reason:` section included.
    pub expected_output: String,
    #[serde(default)]
    pub reasoning: String,
    /// Sparse TF-IDF weights, filled when the example joins a [`PromptDb`].
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub feature_vector: BTreeMap<String, f64>,
}

impl PromptExample {
    /// Violations of the example invariant: the expected output must parse and
    /// validate against the table rebuilt from its own digest.
    pub fn violations(&self) -> Vec<String> {
        let table = match DataTable::from_digest(&self.id, &self.table_digest) {
            Ok(t) => t,
            Err(e) => return vec![format!("table digest: {e}")],
        };
        match parse_wire(&self.expected_output) {
            Ok(result) => validate_binding(&result, &table),
            Err(e) => vec![format!("expected output: {e}")],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    CosineTfidf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub k: usize,
    pub similarity: Similarity,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k: 10,
            similarity: Similarity::CosineTfidf,
        }
    }
}

#[derive(Debug, Error)]
pub enum PromptDbError {
    #[error("failed to access prompt database: {0}")]
    Io(#[from] std::io::Error),
    #[error("prompt database line {line}: {detail}")]
    Invalid { line: usize, detail: String },
}

/// Unigram and bigram terms of a text.
fn terms(text: &str) -> Vec<String> {
    let words: Vec<String> = word_tokens(text).into_iter().map(|t| t.2).collect();
    let mut out = words.clone();
    out.extend(words.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

/// TF-IDF model fit on a document collection, smoothed idf
/// `ln((1 + N) / (1 + df)) + 1`, L2-normalized vectors.
#[derive(Debug, Clone, Default)]
pub struct TfIdf {
    idf: HashMap<String, f64>,
}

impl TfIdf {
    pub fn fit<'a>(docs: impl IntoIterator<Item = &'a str>) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut n = 0usize;
        for d in docs {
            n += 1;
            let mut seen: Vec<String> = terms(d);
            seen.sort();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let idf = df
            .into_iter()
            .map(|(t, c)| (t, ((1.0 + n as f64) / (1.0 + c as f64)).ln() + 1.0))
            .collect();
        Self { idf }
    }

    /// Vector over the fitted vocabulary; unseen terms are dropped.
    pub fn vectorize(&self, text: &str) -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in terms(text) {
            if self.idf.contains_key(&t) {
                *tf.entry(t).or_default() += 1.0;
            }
        }
        for (t, w) in tf.iter_mut() {
            *w *= self.idf[t];
        }
        let norm = tf.values().map(|w| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            tf.values_mut().for_each(|w| *w /= norm);
        }
        tf
    }
}

pub fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter_map(|(t, w)| large.get(t).map(|v| w * v)).sum()
}

/// Indices of the `min(k, n)` highest similarities, ordered ascending so
/// the most similar comes last. Ties rank the lower index as more similar.
pub fn rank_by_similarity(sims: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sims.len()).collect();
    idx.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
    idx.truncate(k.min(sims.len()));
    idx.reverse();
    idx
}

/// Prompt examples with a TF-IDF index over their input texts.
#[derive(Debug, Clone, Default)]
pub struct PromptDb {
    examples: Vec<PromptExample>,
    model: TfIdf,
}

impl PromptDb {
    pub fn new(mut examples: Vec<PromptExample>) -> Self {
        let model = TfIdf::fit(examples.iter().map(|e| e.input_text.as_str()));
        for e in &mut examples {
            e.feature_vector = model.vectorize(&e.input_text);
        }
        Self { examples, model }
    }

    /// Reads line-delimited examples; every line must satisfy the example invariant.
    pub fn from_jsonl(text: &str) -> Result<Self, PromptDbError> {
        let mut examples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let ex: PromptExample = serde_json::from_str(line).map_err(|e| PromptDbError::Invalid {
                line: i + 1,
                detail: e.to_string(),
            })?;
            let v = ex.violations();
            if !v.is_empty() {
                return Err(PromptDbError::Invalid {
                    line: i + 1,
                    detail: v.join("; "),
                });
            }
            examples.push(ex);
        }
        Ok(Self::new(examples))
    }

    pub fn load(path: &Path) -> Result<Self, PromptDbError> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }

    /// The bundled example set.
    pub fn bundled() -> Self {
        Self::from_jsonl(include_str!("../../data/prompt_db.jsonl")).expect("bundled prompt database is valid")
    }

    pub fn examples(&self) -> &[PromptExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.examples.iter().any(|e| e.id == id)
    }

    /// Cosine similarity of `text` to every example, in database order.
    pub fn similarities(&self, text: &str) -> Vec<f64> {
        let q = self.model.vectorize(text);
        self.examples.iter().map(|e| cosine(&q, &e.feature_vector)).collect()
    }
}

/// Appends examples to a line-delimited database file.
pub fn append_examples(path: &Path, examples: &[PromptExample]) -> Result<(), PromptDbError> {
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    for e in examples {
        let mut e = e.clone();
        e.feature_vector.clear();
        writeln!(f, "{}", serde_json::to_string(&e).expect("example serializes"))?;
    }
    Ok(())
}

/// The `min(k, |db|)` most similar examples, least similar first.
pub fn select_examples(text: &str, db: &PromptDb, cfg: &RetrievalConfig) -> Vec<PromptExample> {
    let sims = db.similarities(text);
    rank_by_similarity(&sims, cfg.k)
        .into_iter()
        .map(|i| db.examples[i].clone())
        .collect()
}
