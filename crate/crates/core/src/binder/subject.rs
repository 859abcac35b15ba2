//! Subject detection: fuzzy matching of column names in narrative text.
//!
//! A column name contributes its stemmed content tokens. Each token is
//! weighted by `1 / (number of numeric columns containing it)` so words
//! shared by many columns ("cars", "sales") carry little evidence. A mention
//! is a run of text tokens matching the column's tokens with at most
//! `MAX_GAP` unmatched tokens between consecutive matches; its score is the
//! matched weight over the column's total weight. Mentions scoring below
//! `SUBJECT_THRESHOLD` are discarded, and overlapping mentions of different
//! columns are resolved toward the higher score, then the longer span.

use std::collections::{BTreeSet, HashMap};

use super::text::{content_tokens, word_tokens};
use crate::table::DataTable;

pub const SUBJECT_THRESHOLD: f64 = 0.5;
const MAX_GAP: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectMention {
    pub column: String,
    /// Byte range of the mention in the searched text.
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

struct ColumnTokens {
    name: String,
    tokens: Vec<String>,
    total: f64,
}

/// Precomputed column vocabularies for one table.
pub struct SubjectIndex {
    columns: Vec<ColumnTokens>,
    weight: HashMap<String, f64>,
}

impl SubjectIndex {
    pub fn new(table: &DataTable) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut cols = Vec::new();
        for c in table.numeric_columns() {
            let toks: BTreeSet<String> = content_tokens(&c.name).into_iter().map(|t| t.2).collect();
            for t in &toks {
                *df.entry(t.clone()).or_default() += 1;
            }
            cols.push((c.name.clone(), toks.into_iter().collect::<Vec<_>>()));
        }
        let weight: HashMap<String, f64> = df.into_iter().map(|(t, n)| (t, 1.0 / n as f64)).collect();
        let columns = cols
            .into_iter()
            .map(|(name, tokens)| {
                let total = tokens.iter().map(|t| weight[t]).sum();
                ColumnTokens { name, tokens, total }
            })
            .collect();
        Self { columns, weight }
    }

    /// Non-overlapping subject mentions in `text`, in text order.
    pub fn mentions(&self, text: &str) -> Vec<SubjectMention> {
        let all_tokens = word_tokens(text);
        let toks = content_tokens(text);
        let mut found = Vec::new();
        for col in &self.columns {
            if col.tokens.is_empty() || col.total <= 0.0 {
                continue;
            }
            // Indices (into toks) of tokens belonging to this column.
            let hits: Vec<usize> = (0..toks.len()).filter(|&i| col.tokens.contains(&toks[i].2)).collect();
            let mut i = 0;
            while i < hits.len() {
                let mut j = i;
                while j + 1 < hits.len() && gap(&all_tokens, &toks, hits[j], hits[j + 1]) <= MAX_GAP {
                    j += 1;
                }
                let matched: BTreeSet<&str> = hits[i..=j].iter().map(|&k| toks[k].2.as_str()).collect();
                let score = matched.iter().map(|t| self.weight[*t]).sum::<f64>() / col.total;
                if score >= SUBJECT_THRESHOLD {
                    found.push(SubjectMention {
                        column: col.name.clone(),
                        start: toks[hits[i]].0,
                        end: toks[hits[j]].1,
                        score,
                    });
                }
                i = j + 1;
            }
        }
        found.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then((b.end - b.start).cmp(&(a.end - a.start)))
                .then(a.start.cmp(&b.start))
        });
        let mut kept: Vec<SubjectMention> = Vec::new();
        for m in found {
            if kept.iter().all(|k| m.end <= k.start || k.end <= m.start) {
                kept.push(m);
            }
        }
        kept.sort_by_key(|m| m.start);
        kept
    }
}

/// Number of word tokens strictly between two content tokens that are not
/// stopwords; stopwords are free.
fn gap(all: &[(usize, usize, String)], content: &[(usize, usize, String)], a: usize, b: usize) -> usize {
    let (from, to) = (content[a].1, content[b].0);
    if from > to {
        return 0;
    }
    let between = all.iter().filter(|t| t.0 >= from && t.1 <= to).count();
    let content_between = b - a - 1;
    // Stopwords between the two hits count half so "change in real GDP" spans.
    content_between + (between - content_between) / 2
}
