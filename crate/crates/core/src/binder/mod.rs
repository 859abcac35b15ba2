//! Text-data binding: narrative segmentation, prompt construction, provider
//! calls with retries, response validation, and the deterministic fallback.

mod fallback;
pub mod numbers;
mod prompt;
mod provider;
mod retrieval;
pub mod subject;
pub(crate) mod text;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fallback::{fallback_bind, fallback_bind_with};
pub use prompt::{build_prompt, output_template, PromptSequence};
pub use provider::{
    provider_from_name, request_key, request_key_parts, FixtureProvider, HttpProvider, LimitedProvider, LlmProvider, NullProvider,
    ProviderError, RecordingProvider, ENV_ENDPOINT, ENV_KEY_VAR, ENV_MODEL,
};
pub use retrieval::{
    append_examples, cosine, rank_by_similarity, select_examples, PromptDb, PromptDbError, PromptExample,
    RetrievalConfig, Similarity, TfIdf,
};

use crate::binding::{validate_binding, BindingResult, VocabKind, VocabSpan};
use crate::metrics::Label;
use crate::table::DataTable;
use crate::trend::{classify_trend, summary_statistic, verify_span, DetectorParams, Lexicon, PatternId, Span, TrendKind};
use crate::wire::parse_wire;
use numbers::extract_numbers;
use subject::SubjectIndex;
use text::sentence_ranges;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindError {
    #[error("article is empty")]
    EmptyArticle,
    #[error("binding failed: {0}")]
    BindingFailed(String),
}

/// A segment of the article about one subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Narrative {
    pub id: String,
    pub order: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_hint: Option<String>,
}

fn narratives_from_ranges(article: &str, ranges: &[(usize, usize)], hints: Vec<Option<String>>) -> Vec<Narrative> {
    ranges
        .iter()
        .zip(hints)
        .enumerate()
        .map(|(order, (&(s, e), hint))| Narrative {
            id: format!("n{order}"),
            order,
            text: article[s..e].to_string(),
            subject_hint: hint,
        })
        .collect()
}

/// Splits an article into narratives: sentences are grouped while they share
/// their first-mentioned subject column; sentences without a subject join the
/// running narrative (or the first one, when they lead the article).
pub fn segment_narratives(article: &str, table: &DataTable) -> Result<Vec<Narrative>, BindError> {
    if article.trim().is_empty() {
        return Err(BindError::EmptyArticle);
    }
    let index = SubjectIndex::new(table);
    let mut groups: Vec<((usize, usize), Option<String>)> = Vec::new();
    for (s, e) in sentence_ranges(article) {
        let subject = index.mentions(&article[s..e]).into_iter().next().map(|m| m.column);
        match (groups.last_mut(), subject) {
            (Some(last), Some(c)) if last.1.as_deref() == Some(&c) => last.0 .1 = e,
            (Some(last), Some(c)) if last.1.is_none() => {
                last.0 .1 = e;
                last.1 = Some(c);
            }
            (Some(last), None) => last.0 .1 = e,
            (_, subject) => groups.push(((s, e), subject)),
        }
    }
    let (ranges, hints): (Vec<_>, Vec<_>) = groups.into_iter().unzip();
    Ok(narratives_from_ranges(article, &ranges, hints))
}

const SEGMENT_TEMPLATE: &str = "Split the article into narratives, one per subject, in article order. \
Return only a JSON array of strings whose concatenation is the article.";

/// Asks the provider to segment the article and maps its answer back onto
/// the article's exact text; falls back to [`segment_narratives`] when the
/// answer does not reconstruct the article. The second value explains a fallback.
pub fn segment_with_provider(
    article: &str,
    table: &DataTable,
    provider: &dyn LlmProvider,
    timeout: Duration,
) -> Result<(Vec<Narrative>, Option<String>), BindError> {
    if article.trim().is_empty() {
        return Err(BindError::EmptyArticle);
    }
    let prompt = PromptSequence {
        system_instruction: "You segment financial articles.".into(),
        examples: vec![],
        task_table: table.digest(),
        task_text: article.to_string(),
        output_template: SEGMENT_TEMPLATE.into(),
        reasoning_instruction: String::new(),
    };
    let failure = match provider.send(&prompt, timeout) {
        Ok(raw) => match map_segments(article, &raw) {
            Some(ranges) => {
                let index = SubjectIndex::new(table);
                let hints = ranges
                    .iter()
                    .map(|&(s, e)| index.mentions(&article[s..e]).into_iter().next().map(|m| m.column))
                    .collect();
                return Ok((narratives_from_ranges(article, &ranges, hints), None));
            }
            None => "provider segmentation does not reconstruct the article".to_string(),
        },
        Err(e) => e.to_string(),
    };
    Ok((segment_narratives(article, table)?, Some(failure)))
}

/// Aligns provider segments with the article, ignoring whitespace.
fn map_segments(article: &str, raw: &str) -> Option<Vec<(usize, usize)>> {
    let open = raw.find('[')?;
    let close = raw.rfind(']')?;
    let segments: Vec<String> = serde_json::from_str(raw.get(open..=close)?).ok()?;
    let chars: Vec<(usize, char)> = article.char_indices().collect();
    let mut pos = 0;
    let mut ranges = Vec::new();
    for seg in segments.iter().filter(|s| !s.trim().is_empty()) {
        let start = if ranges.is_empty() { 0 } else { chars.get(pos).map_or(article.len(), |c| c.0) };
        for want in seg.chars().filter(|c| !c.is_whitespace()) {
            while pos < chars.len() && chars[pos].1.is_whitespace() {
                pos += 1;
            }
            if pos >= chars.len() || chars[pos].1 != want {
                return None;
            }
            pos += 1;
        }
        while pos < chars.len() && chars[pos].1.is_whitespace() {
            pos += 1;
        }
        let end = chars.get(pos).map_or(article.len(), |c| c.0);
        ranges.push((start, end));
    }
    (pos == chars.len() && !ranges.is_empty()).then_some(ranges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BindConfig {
    pub retrieval: RetrievalConfig,
    pub params: DetectorParams,
    /// Re-asks after the first malformed or invalid response.
    pub max_retries: usize,
    pub timeout: Duration,
}

impl Default for BindConfig {
    fn default() -> Self {
        Self {
            retrieval: RetrievalConfig::default(),
            params: DetectorParams::default(),
            max_retries: 2,
            timeout: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindSource {
    Provider,
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BindOutcome {
    pub result: BindingResult,
    pub source: BindSource,
    /// A configured provider failed and the fallback answered instead.
    pub degraded: bool,
    pub notes: Vec<String>,
}

/// Everything binding needs besides the narrative.
pub struct BindContext<'a> {
    pub table: &'a DataTable,
    pub provider: &'a dyn LlmProvider,
    pub db: &'a PromptDb,
    pub lexicon: &'a Lexicon,
    pub config: BindConfig,
}

pub fn bind(narrative: &Narrative, ctx: &BindContext<'_>) -> Result<BindOutcome, BindError> {
    bind_variant(narrative, ctx, 0)
}

/// Binding with `variant` least-similar examples removed from the prompt, so
/// a regenerated request differs from the original.
pub fn bind_variant(narrative: &Narrative, ctx: &BindContext<'_>, variant: usize) -> Result<BindOutcome, BindError> {
    let mut notes = Vec::new();
    if !ctx.provider.is_null() {
        let examples = select_examples(&narrative.text, ctx.db, &ctx.config.retrieval);
        let prompt = build_prompt(&narrative.text, ctx.table, &examples).without_least_similar(variant);
        for attempt in 0..=ctx.config.max_retries {
            let raw = match ctx.provider.send(&prompt, ctx.config.timeout) {
                Ok(raw) => raw,
                Err(e) => {
                    notes.push(format!("attempt {}: {e}", attempt + 1));
                    if matches!(e, ProviderError::Disabled | ProviderError::NoFixture(_)) {
                        break;
                    }
                    continue;
                }
            };
            match parse_wire(&raw) {
                Ok(mut result) => {
                    let violations = validate_binding(&result, ctx.table);
                    if !violations.is_empty() {
                        notes.push(format!("attempt {}: invalid binding: {}", attempt + 1, violations.join("; ")));
                        continue;
                    }
                    if result.reason.trim().is_empty() {
                        notes.push(format!("attempt {}: response has an empty Reason", attempt + 1));
                        continue;
                    }
                    notes.extend(cross_check(&mut result, ctx.table, ctx.lexicon, &ctx.config.params));
                    return Ok(BindOutcome {
                        result,
                        source: BindSource::Provider,
                        degraded: false,
                        notes,
                    });
                }
                Err(e) => notes.push(format!("attempt {}: {e}", attempt + 1)),
            }
        }
    }
    let result = fallback_bind_with(&narrative.text, ctx.table, ctx.lexicon, &ctx.config.params)?;
    let violations = validate_binding(&result, ctx.table);
    if !violations.is_empty() {
        return Err(BindError::BindingFailed(violations.join("; ")));
    }
    Ok(BindOutcome {
        result,
        source: BindSource::Fallback,
        degraded: !ctx.provider.is_null(),
        notes,
    })
}

/// Checks trend records against the detectors and appends a note to the
/// reason for each position the data does not support.
pub fn cross_check(result: &mut BindingResult, table: &DataTable, lexicon: &Lexicon, params: &DetectorParams) -> Vec<String> {
    let mut notes = Vec::new();
    for rec in &result.records {
        let Some(trend) = rec.trend.as_deref() else { continue };
        let Some((pattern, kind)) = classify_trend(trend, lexicon) else { continue };
        let Some(series) = table.numeric_series(&rec.data_name) else { continue };
        let span = Span::new(rec.start_row(), rec.end_row());
        let supported = match kind {
            TrendKind::ChangePattern => verify_span(&series, pattern, &span, params),
            TrendKind::SummaryIndicator if pattern != PatternId::MeanLevel => summary_statistic(&series, pattern)
                .is_ok_and(|(_, rows)| rows.contains(&span.start_row)),
            _ => true,
        };
        if !supported {
            notes.push(format!(
                "rows {}-{} of '{}' do not satisfy {pattern} for '{trend}'",
                span.start_row, span.end_row, rec.data_name
            ));
        }
    }
    if !notes.is_empty() {
        result.reason.push_str(&format!(" [Check: {}.]", notes.join("; ")));
    }
    notes
}

fn find_ci(text: &str, needle: &str, from: usize, to: usize) -> Option<(usize, usize)> {
    if needle.trim().is_empty() {
        return None;
    }
    let re = regex::RegexBuilder::new(&regex::escape(needle.trim()))
        .case_insensitive(true)
        .build()
        .ok()?;
    re.find(&text[from..to]).map(|m| (from + m.start(), from + m.end()))
}

/// Vocabulary spans of a binding result within its narrative: subjects from
/// object names, numericals from number mentions equal to a bound value,
/// trends from trend phrases. Offsets count chars.
pub fn annotate(text: &str, result: &BindingResult, table: &DataTable) -> Vec<VocabSpan> {
    let mut spans: Vec<(usize, usize, VocabKind)> = Vec::new();
    let numbers: Vec<_> = extract_numbers(text).into_iter().filter(|n| !n.is_year()).collect();
    for rec in &result.records {
        let (from, to) = find_ci(text, &rec.text, 0, text.len()).unwrap_or((0, text.len()));
        let locate = |needle: &str| find_ci(text, needle, from, to).or_else(|| find_ci(text, needle, 0, text.len()));
        if let Some((s, e)) = locate(&rec.object_name) {
            spans.push((s, e, VocabKind::Subject));
        }
        if let Some(t) = rec.trend.as_deref() {
            if let Some((s, e)) = locate(t) {
                spans.push((s, e, VocabKind::Trend));
            }
        }
        if let (Some(values), Some(meta)) = (&rec.num, fallback::column_meta(table, &rec.data_name)) {
            for v in values {
                let hit = numbers
                    .iter()
                    .filter(|n| n.matches_cell(*v, meta))
                    .min_by_key(|n| (!(n.start >= from && n.end <= to), n.start));
                if let Some(n) = hit {
                    spans.push((n.start, n.end, VocabKind::Numerical));
                }
            }
        }
    }
    spans.sort_by_key(|s| (s.0, s.1));
    spans.dedup();
    // Subjects are reported once per surface form.
    let mut out: Vec<VocabSpan> = Vec::new();
    for (s, e, k) in spans {
        if k == VocabKind::Subject
            && out
                .iter()
                .any(|o| o.kind == VocabKind::Subject && o.text.eq_ignore_ascii_case(&text[s..e]))
        {
            continue;
        }
        out.push(VocabSpan::from_bytes(k, text, s, e));
    }
    out
}

/// Evaluation labels of annotated spans.
pub fn labels_of(narrative_id: &str, spans: &[VocabSpan]) -> Vec<Label> {
    spans
        .iter()
        .map(|s| Label {
            narrative: narrative_id.to_string(),
            kind: s.kind,
            text: s.text.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Cell, ColumnKind, ColumnMeta};

    fn power() -> DataTable {
        let cols = ["Renewables", "LNG", "Coal"];
        let mut columns = vec![ColumnMeta::new("Year", ColumnKind::Temporal)];
        columns.extend(cols.iter().map(|c| ColumnMeta::new(*c, ColumnKind::Numeric).with_unit("Billion kWh")));
        let rows = (0..3)
            .map(|r| {
                let mut row = vec![Cell::Text(format!("{}", 2030 + 5 * r))];
                row.extend((0..3).map(|c| Cell::Number((100 * (c + 1) + 10 * r) as f64)));
                row
            })
            .collect();
        DataTable::new("power", columns, rows)
    }

    #[test]
    fn segmentation_groups_by_subject_and_reconstructs() {
        let article = "Experts made a forecast. Renewables will rise. Renewables reach 120 billion kWh. \
LNG shrinks.  Coal falls too.\n";
        let ns = segment_narratives(article, &power()).unwrap();
        assert_eq!(ns.len(), 3);
        assert_eq!(ns.iter().map(|n| n.text.as_str()).collect::<String>(), article);
        assert_eq!(ns[0].subject_hint.as_deref(), Some("Renewables"));
        assert!(ns[0].text.starts_with("Experts"));
        assert_eq!(ns.iter().map(|n| n.order).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn single_sentence_is_one_narrative() {
        let ns = segment_narratives("Coal falls.", &power()).unwrap();
        assert_eq!(ns.len(), 1);
        assert_eq!(ns[0].order, 0);
        assert_eq!(segment_narratives("  ", &power()), Err(BindError::EmptyArticle));
    }

    #[test]
    fn provider_segments_are_aligned_to_the_article() {
        struct Seg;
        impl LlmProvider for Seg {
            fn name(&self) -> &str {
                "seg"
            }
            fn send(&self, _: &PromptSequence, _: Duration) -> Result<String, ProviderError> {
                Ok(r#"Here: ["Coal falls.", "LNG  rises."]"#.into())
            }
        }
        let article = "Coal falls. LNG rises.";
        let (ns, note) = segment_with_provider(article, &power(), &Seg, Duration::from_secs(1)).unwrap();
        assert!(note.is_none());
        assert_eq!(ns.iter().map(|n| n.text.as_str()).collect::<Vec<_>>(), vec!["Coal falls. ", "LNG rises."]);
        let (ns, note) = segment_with_provider("Coal falls. Oil.", &power(), &Seg, Duration::from_secs(1)).unwrap();
        assert!(note.is_some());
        assert_eq!(ns.len(), 1);
    }

    #[test]
    fn annotation_marks_the_three_kinds() {
        let table = power();
        let text = "Renewables will continuously increase and reach 120 billion kWh in 2035.";
        let result = fallback_bind(text, &table, &Lexicon::default()).unwrap();
        let spans = annotate(text, &result, &table);
        let got: Vec<(VocabKind, &str)> = spans.iter().map(|s| (s.kind, s.text.as_str())).collect();
        assert_eq!(
            got,
            vec![
                (VocabKind::Subject, "Renewables"),
                (VocabKind::Trend, "continuously increase"),
                (VocabKind::Numerical, "120 billion"),
            ]
        );
        assert!(spans.iter().all(|s| s.is_consistent(text)));
    }
}
