//! Precision / recall / F1 over vocabulary labels.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::binding::VocabKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl Metrics {
    /// F1 uses the count form 2TP / (2TP + FP + FN), equal to the harmonic
    /// mean of P and R but with a single rounding.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
        let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
        let f1 = if tp > 0 { (2 * tp) as f64 / (2 * tp + fp + fn_) as f64 } else { 0.0 };
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

/// One labeled vocabulary occurrence, scoped to a narrative.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    pub narrative: String,
    pub kind: VocabKind,
    pub text: String,
}

/// Lowercases, collapses whitespace and strips surrounding punctuation.
pub fn normalize_label(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed
        .trim_matches(|c: char| !c.is_alphanumeric() && c != '%' && c != '$')
        .to_string()
}

/// Scores predicted labels against gold labels per vocabulary kind. Labels
/// match when narrative, kind and normalized text agree; duplicates are
/// matched as a multiset.
pub fn evaluate(predicted: &[Label], gold: &[Label]) -> BTreeMap<VocabKind, Metrics> {
    let key = |l: &Label| (l.narrative.clone(), l.kind, normalize_label(&l.text));
    let mut gold_counts: HashMap<(String, VocabKind, String), u64> = HashMap::new();
    for g in gold {
        *gold_counts.entry(key(g)).or_default() += 1;
    }
    let mut tp: BTreeMap<VocabKind, u64> = BTreeMap::new();
    let mut fp: BTreeMap<VocabKind, u64> = BTreeMap::new();
    for p in predicted {
        match gold_counts.get_mut(&key(p)) {
            Some(n) if *n > 0 => {
                *n -= 1;
                *tp.entry(p.kind).or_default() += 1;
            }
            _ => *fp.entry(p.kind).or_default() += 1,
        }
    }
    let mut fn_: BTreeMap<VocabKind, u64> = BTreeMap::new();
    for ((_, kind, _), n) in gold_counts {
        *fn_.entry(kind).or_default() += n;
    }
    VocabKind::ALL
        .iter()
        .map(|k| {
            let get = |m: &BTreeMap<VocabKind, u64>| m.get(k).copied().unwrap_or(0);
            (*k, Metrics::from_counts(get(&tp), get(&fp), get(&fn_)))
        })
        .collect()
}

/// Per-narrative span lists; the format of both gold corpora and prediction files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub narratives: Vec<NarrativeLabels>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeLabels {
    pub id: String,
    pub spans: Vec<SpanLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanLabel {
    pub kind: VocabKind,
    pub text: String,
}

impl LabelSet {
    pub fn load(path: &Path) -> Result<Self, LabelSetError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn labels(&self) -> Vec<Label> {
        self.narratives
            .iter()
            .flat_map(|n| {
                n.spans.iter().map(move |s| Label {
                    narrative: n.id.clone(),
                    kind: s.kind,
                    text: s.text.clone(),
                })
            })
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LabelSetError {
    #[error("failed to read label file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed label file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Evaluation report with one row per vocabulary kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kinds: BTreeMap<VocabKind, Metrics>,
}

impl EvalReport {
    pub fn compute(predicted: &LabelSet, gold: &LabelSet) -> Self {
        Self {
            kinds: evaluate(&predicted.labels(), &gold.labels()),
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<10} {:>4} {:>4} {:>4} {:>9} {:>9} {:>9}\n",
            "kind", "TP", "FP", "FN", "P", "R", "F1"
        );
        for (kind, m) in &self.kinds {
            out.push_str(&format!(
                "{:<10} {:>4} {:>4} {:>4} {:>9.4} {:>9.4} {:>9.4}\n",
                kind.as_str(),
                m.tp,
                m.fp,
                m.fn_,
                m.precision,
                m.recall,
                m.f1
            ));
        }
        out
    }
}
