//! The bundled gold corpus and the power-generation sample article.
//!
//! Gold labeling convention: a subject span is the narrative's wording of a
//! table column, reported once per surface form; a numerical span covers the
//! currency prefix, digits, scale word and percent sign but not trailing unit
//! nouns; a trend span is the trend phrase as written.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::binder::{annotate, fallback_bind};
use crate::metrics::{LabelSet, LabelSetError, NarrativeLabels, SpanLabel};
use crate::table::{DataTable, TableError};
use crate::trend::Lexicon;

const BUNDLED_CORPUS: &str = include_str!("../data/corpus/corpus.json");
const BUNDLED_TABLES: [(&str, &str); 7] = [
    ("tables/bank.csv", include_str!("../data/corpus/tables/bank.csv")),
    ("tables/gdp.csv", include_str!("../data/corpus/tables/gdp.csv")),
    ("tables/hedge.csv", include_str!("../data/corpus/tables/hedge.csv")),
    ("tables/inflation.csv", include_str!("../data/corpus/tables/inflation.csv")),
    ("tables/power.csv", include_str!("../data/corpus/tables/power.csv")),
    ("tables/trade.csv", include_str!("../data/corpus/tables/trade.csv")),
    ("tables/vehicles.csv", include_str!("../data/corpus/tables/vehicles.csv")),
];

/// Checked-in evaluation report of the fallback binder on the bundled corpus.
pub const EXPECTED_REPORT: &str = include_str!("../data/corpus/expected_report.txt");

pub const POWER_TABLE_CSV: &str = include_str!("../data/fixtures/power/table.csv");
pub const POWER_ARTICLE: &str = include_str!("../data/fixtures/power/article.txt");

/// The five-source power-generation table behind [`POWER_ARTICLE`].
pub fn power_table() -> DataTable {
    DataTable::from_csv_str("power", POWER_TABLE_CSV).expect("bundled power table parses")
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Labels(#[from] LabelSetError),
    #[error("table {path}: {source}")]
    Table { path: String, source: TableError },
    #[error("narrative {id}: gold span \"{text}\" is not in the text")]
    SpanNotInText { id: String, text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusNarrative {
    pub id: String,
    /// Path of the table relative to the corpus file.
    pub table: String,
    pub text: String,
    pub spans: Vec<SpanLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CorpusFile {
    narratives: Vec<CorpusNarrative>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub narratives: Vec<CorpusNarrative>,
    tables: BTreeMap<String, DataTable>,
}

impl Corpus {
    pub fn bundled() -> Self {
        let tables = BUNDLED_TABLES.iter().map(|(p, csv)| (p.to_string(), table_from(p, csv).expect("bundled table")));
        Self::assemble(BUNDLED_CORPUS, tables.collect()).expect("bundled corpus is consistent")
    }

    /// Loads a corpus file and the tables it references.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(LabelSetError::from)?;
        let file: CorpusFile = serde_json::from_str(&text).map_err(LabelSetError::from)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        let mut tables = BTreeMap::new();
        for n in &file.narratives {
            if !tables.contains_key(&n.table) {
                let table = DataTable::load(&base.join(&n.table)).map_err(|source| CorpusError::Table {
                    path: n.table.clone(),
                    source,
                })?;
                tables.insert(n.table.clone(), table);
            }
        }
        Self::assemble(&text, tables)
    }

    fn assemble(json: &str, tables: BTreeMap<String, DataTable>) -> Result<Self, CorpusError> {
        let file: CorpusFile = serde_json::from_str(json).map_err(LabelSetError::from)?;
        for n in &file.narratives {
            if !tables.contains_key(&n.table) {
                return Err(CorpusError::Table {
                    path: n.table.clone(),
                    source: TableError::Invalid(vec!["table not found".into()]),
                });
            }
            if let Some(s) = n.spans.iter().find(|s| !n.text.contains(&s.text)) {
                return Err(CorpusError::SpanNotInText {
                    id: n.id.clone(),
                    text: s.text.clone(),
                });
            }
        }
        Ok(Self {
            narratives: file.narratives,
            tables,
        })
    }

    pub fn table_of(&self, narrative: &CorpusNarrative) -> &DataTable {
        &self.tables[&narrative.table]
    }

    pub fn gold(&self) -> LabelSet {
        LabelSet {
            narratives: self
                .narratives
                .iter()
                .map(|n| NarrativeLabels {
                    id: n.id.clone(),
                    spans: n.spans.clone(),
                })
                .collect(),
        }
    }

    /// Labels predicted by the fallback binder; a narrative it cannot bind
    /// contributes no spans.
    pub fn predict_fallback(&self, lexicon: &Lexicon) -> LabelSet {
        LabelSet {
            narratives: self
                .narratives
                .iter()
                .map(|n| {
                    let table = self.table_of(n);
                    let spans = fallback_bind(&n.text, table, lexicon)
                        .map(|r| annotate(&n.text, &r, table))
                        .unwrap_or_default();
                    NarrativeLabels {
                        id: n.id.clone(),
                        spans: spans
                            .into_iter()
                            .map(|s| SpanLabel {
                                kind: s.kind,
                                text: s.text,
                            })
                            .collect(),
                    }
                })
                .collect(),
        }
    }
}

fn table_from(path: &str, csv: &str) -> Result<DataTable, CorpusError> {
    let name = Path::new(path).file_stem().map_or("table".into(), |s| s.to_string_lossy().into_owned());
    DataTable::from_csv_str(&name, csv).map_err(|source| CorpusError::Table {
        path: path.to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::EvalReport;

    #[test]
    fn bundled_corpus_has_twenty_narratives() {
        assert_eq!(Corpus::bundled().narratives.len(), 20);
    }

    #[test]
    fn fallback_report_matches_checked_in_report() {
        let c = Corpus::bundled();
        let report = EvalReport::compute(&c.predict_fallback(&Lexicon::default()), &c.gold());
        assert_eq!(report.to_table(), EXPECTED_REPORT);
    }

    #[test]
    fn power_fixture_parses() {
        let t = power_table();
        assert_eq!(t.numeric_columns().count(), 5);
        assert_eq!(t.row_count(), 5);
    }
}
