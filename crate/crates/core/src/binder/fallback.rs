//! Deterministic, network-free binder.
//!
//! Rules, applied to one narrative:
//! 1. Subjects are fuzzy column-name mentions (see [`super::subject`]); with
//!    none the narrative cannot be bound.
//! 2. Each number (years excluded) is tried against, in order: the column of
//!    the nearest preceding subject mention (else the nearest following one),
//!    the other mentioned columns by distance, row-wise sums of two columns
//!    mentioned in the same sentence, then every remaining numeric column.
//!    The first column holding an equal cell wins. Among several equal rows,
//!    rows whose x-axis label occurs in the sentence are preferred, then the
//!    earliest. Numbers equal to no cell are dropped.
//! 3. Each lexicon phrase is attached to the nearest preceding subject
//!    mention. Change patterns take the best detected span that starts after
//!    the previous trend span on the same column, trimming a span that
//!    shares its first row with the previous one. Summary indicators take the
//!    rows attaining the statistic, special events the row named in the
//!    sentence or the strongest detected jump.

use std::collections::BTreeSet;

use super::numbers::{extract_numbers, NumberMention};
use super::subject::{SubjectIndex, SubjectMention};
use super::text::{clause_at, sentence_ranges, word_tokens};
use super::BindError;
use crate::binding::{BindingRecord, BindingResult};
use crate::table::{format_number, ColumnMeta, DataTable, DERIVED_SEPARATOR};
use crate::trend::{
    detect_pattern, summary_statistic, window_score, DetectorParams, Lexicon, PatternId, TrendKind,
};

/// Metadata governing unit conversion for a table or derived column.
pub(crate) fn column_meta<'a>(table: &'a DataTable, name: &str) -> Option<&'a ColumnMeta> {
    table
        .column(name)
        .or_else(|| table.derived_parts(name).and_then(|p| table.column(p[0])))
}

/// Rows of `column` whose cell the mention denotes.
fn matching_rows(table: &DataTable, column: &str, m: &NumberMention) -> Vec<(usize, f64)> {
    let (Some(meta), Some(series)) = (column_meta(table, column), table.numeric_series(column)) else {
        return vec![];
    };
    series
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.filter(|v| m.matches_cell(*v, meta)).map(|v| (i + 1, v)))
        .collect()
}

fn contains_phrase(haystack: &str, needle: &str) -> bool {
    let h: Vec<String> = word_tokens(haystack).into_iter().map(|t| t.2).collect();
    let n: Vec<String> = word_tokens(needle).into_iter().map(|t| t.2).collect();
    !n.is_empty() && h.windows(n.len()).any(|w| w == n.as_slice())
}

/// Rows whose x-axis label appears in `sentence`.
fn rows_named_in(table: &DataTable, sentence: &str) -> Vec<usize> {
    if table.x_column().is_none() {
        return vec![];
    }
    (1..=table.row_count())
        .filter(|&r| contains_phrase(sentence, &table.x_label(r)))
        .collect()
}

fn sentence_of(text: &str, pos: usize) -> &str {
    sentence_ranges(text)
        .into_iter()
        .find(|&(s, e)| s <= pos && pos < e)
        .map_or(text, |(s, e)| &text[s..e])
}

fn clause_text(text: &str, pos: usize) -> String {
    let (s, e) = clause_at(text, pos);
    text[s..e].to_string()
}

/// Subject mention nearest before `pos`, else nearest after.
fn anchor_mention(mentions: &[SubjectMention], pos: usize) -> Option<&SubjectMention> {
    mentions
        .iter()
        .filter(|m| m.end <= pos)
        .max_by_key(|m| m.end)
        .or_else(|| mentions.iter().filter(|m| m.start >= pos).min_by_key(|m| m.start))
}

struct Candidate {
    column: String,
    object: String,
}

fn candidates_for(text: &str, table: &DataTable, mentions: &[SubjectMention], m: &NumberMention) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut push = |column: String, object: String, out: &mut Vec<Candidate>| {
        if seen.insert(column.clone()) {
            out.push(Candidate { column, object });
        }
    };
    if let Some(a) = anchor_mention(mentions, m.start) {
        push(a.column.clone(), text[a.start..a.end].to_string(), &mut out);
    }
    let dist = |s: &SubjectMention| if s.end <= m.start { m.start - s.end } else { s.start.saturating_sub(m.end) };
    let mut others: Vec<&SubjectMention> = mentions.iter().collect();
    others.sort_by_key(|s| (dist(s), s.start));
    for s in others {
        push(s.column.clone(), text[s.start..s.end].to_string(), &mut out);
    }
    let (sent_start, sent_end) = sentence_ranges(text)
        .into_iter()
        .find(|&(s, e)| s <= m.start && m.start < e)
        .unwrap_or((0, text.len()));
    let local: Vec<&SubjectMention> = mentions
        .iter()
        .filter(|s| s.start >= sent_start && s.end <= sent_end)
        .collect();
    for (i, a) in local.iter().enumerate() {
        for b in &local[i + 1..] {
            if a.column != b.column {
                let name = format!("{}{DERIVED_SEPARATOR}{}", a.column, b.column);
                push(name, text[a.start..b.end].to_string(), &mut out);
            }
        }
    }
    for c in table.numeric_columns() {
        push(c.name.clone(), c.name.clone(), &mut out);
    }
    out
}

pub fn fallback_bind(text: &str, table: &DataTable, lexicon: &Lexicon) -> Result<BindingResult, BindError> {
    fallback_bind_with(text, table, lexicon, &DetectorParams::default())
}

pub fn fallback_bind_with(
    text: &str,
    table: &DataTable,
    lexicon: &Lexicon,
    params: &DetectorParams,
) -> Result<BindingResult, BindError> {
    let mentions = SubjectIndex::new(table).mentions(text);
    if mentions.is_empty() {
        return Err(BindError::BindingFailed("no table column is mentioned in the narrative".into()));
    }
    let mut reason: Vec<String> = Vec::new();
    let mut reported: BTreeSet<&str> = BTreeSet::new();
    for m in &mentions {
        if reported.insert(&m.column) {
            reason.push(format!(
                "The object '{}' corresponds to the '{}' column in the table (name overlap {:.2}).",
                &text[m.start..m.end],
                m.column,
                m.score
            ));
        }
    }
    let overlaps_subject = |s: usize, e: usize| mentions.iter().any(|m| s < m.end && m.start < e);

    // (text position, record)
    let mut records: Vec<(usize, BindingRecord)> = Vec::new();
    let numbers: Vec<NumberMention> = extract_numbers(text)
        .into_iter()
        .filter(|n| !n.is_year() && !overlaps_subject(n.start, n.end))
        .collect();
    for n in &numbers {
        let written = &text[n.start..n.end];
        let mut bound = false;
        for cand in candidates_for(text, table, &mentions, n) {
            let rows = matching_rows(table, &cand.column, n);
            if rows.is_empty() {
                continue;
            }
            let named = rows_named_in(table, sentence_of(text, n.start));
            let (row, value) = rows
                .iter()
                .copied()
                .find(|(r, _)| named.contains(r))
                .unwrap_or(rows[0]);
            if records
                .iter()
                .any(|(_, r)| r.num.is_some() && r.data_name == cand.column && r.start_row() == row)
            {
                bound = true;
                break;
            }
            reason.push(format!(
                "The numerical value '{written}' for object '{}' is {} in the column '{}' and row {row}.",
                cand.object,
                format_number(value),
                cand.column
            ));
            records.push((
                n.start,
                BindingRecord::numeric(&cand.object, &cand.column, row, value, &clause_text(text, n.start)),
            ));
            bound = true;
            break;
        }
        if !bound {
            reason.push(format!("The number '{written}' does not appear in the data table and is dropped."));
        }
    }

    let number_spans: Vec<(usize, usize)> = numbers.iter().map(|n| (n.start, n.end)).collect();
    let mut cursor: Vec<(String, usize)> = Vec::new();
    for phrase in lexicon.find_phrases(text) {
        if overlaps_subject(phrase.start, phrase.end)
            || number_spans.iter().any(|&(s, e)| phrase.start < e && s < phrase.end)
        {
            continue;
        }
        let written = &text[phrase.start..phrase.end];
        let Some(anchor) = anchor_mention(&mentions, phrase.start) else { continue };
        let column = anchor.column.clone();
        let object = &text[anchor.start..anchor.end];
        let Some(series) = table.numeric_series(&column) else { continue };
        let sentence = sentence_of(text, phrase.start);
        let span = match phrase.kind {
            TrendKind::ChangePattern => {
                let after = cursor.iter().rev().find(|(c, _)| *c == column).map_or(0, |c| c.1);
                change_span(&series, phrase.pattern, after, params)
            }
            TrendKind::SummaryIndicator => summary_span(table, &series, phrase.pattern, sentence),
            TrendKind::SpecialEvent => event_span(table, &series, sentence, params),
        };
        match span {
            Some((start, end)) => {
                reason.push(format!(
                    "The trend '{written}' for object '{object}' corresponds to the column '{column}' and from row {start} to row {end}."
                ));
                cursor.push((column.clone(), end));
                records.push((
                    phrase.start,
                    BindingRecord::trend(object, &column, start, end, written, &clause_text(text, phrase.start)),
                ));
            }
            None => reason.push(format!(
                "The trend '{written}' has no matching {} in the column '{column}' and is dropped.",
                phrase.pattern
            )),
        }
    }

    records.sort_by_key(|(pos, _)| *pos);
    Ok(BindingResult {
        records: records.into_iter().map(|(_, r)| r).collect(),
        reason: reason.join(" "),
    })
}

fn change_span(series: &[Option<f64>], pattern: PatternId, after: usize, params: &DetectorParams) -> Option<(usize, usize)> {
    let spans = detect_pattern(series, pattern, params).ok()?;
    for s in &spans {
        if s.start_row > after {
            return Some((s.start_row, s.end_row));
        }
        if s.end_row > after + 1 {
            let start = (after + 1..s.end_row).find(|&r| series[r - 1].is_some())?;
            if window_score(series, pattern, start, s.end_row, params).is_some() {
                return Some((start, s.end_row));
            }
        }
    }
    spans.first().map(|s| (s.start_row, s.end_row))
}

fn summary_span(table: &DataTable, series: &[Option<f64>], pattern: PatternId, sentence: &str) -> Option<(usize, usize)> {
    let (_, rows) = summary_statistic(series, pattern).ok()?;
    if pattern == PatternId::MeanLevel {
        let first = series.iter().position(Option::is_some)? + 1;
        let last = series.iter().rposition(Option::is_some)? + 1;
        return Some((first, last));
    }
    let named = rows_named_in(table, sentence);
    let row = rows.iter().copied().find(|r| named.contains(r)).or(rows.first().copied())?;
    Some((row, row))
}

fn event_span(table: &DataTable, series: &[Option<f64>], sentence: &str, params: &DetectorParams) -> Option<(usize, usize)> {
    if let Some(r) = rows_named_in(table, sentence).into_iter().find(|r| series[r - 1].is_some()) {
        return Some((r, r));
    }
    let spans = detect_pattern(series, PatternId::EventPoint, params).ok()?;
    spans.first().map(|s| (s.start_row, s.end_row))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binding::validate_binding;
    use crate::table::{Cell, ColumnKind};

    fn table(x: &str, cols: &[(&str, Option<&str>, &[f64])]) -> DataTable {
        let n = cols[0].2.len();
        let mut columns = vec![ColumnMeta::new(x, ColumnKind::Temporal)];
        for (name, unit, _) in cols {
            let c = ColumnMeta::new(*name, ColumnKind::Numeric);
            columns.push(match unit {
                Some(u) => c.with_unit(*u),
                None => c,
            });
        }
        let rows = (0..n)
            .map(|r| {
                std::iter::once(Cell::Text(format!("{}", 2001 + r)))
                    .chain(cols.iter().map(|c| Cell::Number(c.2[r])))
                    .collect()
            })
            .collect();
        DataTable::new("t", columns, rows)
    }

    fn hedge() -> DataTable {
        table(
            "Year",
            &[
                ("Active", None, &[610.0, 640.0, 669.0]),
                ("Launches", None, &[5.0, 9.0, 12.0]),
                ("Liquidations", None, &[20.0, 18.0, 25.0]),
            ],
        )
    }

    #[test]
    fn active_funds_bind_to_row_three() {
        let r = fallback_bind("Active funds reached 669", &hedge(), &Lexicon::default()).unwrap();
        assert_eq!(r.records.len(), 1);
        let rec = &r.records[0];
        assert_eq!((rec.data_name.as_str(), rec.start_row(), rec.num.clone()), ("Active", 3, Some(vec![669.0])));
        assert!(validate_binding(&r, &hedge()).is_empty());
    }

    #[test]
    fn liquidated_funds_bind_to_liquidations() {
        let r = fallback_bind("Another 18 funds were liquidated.", &hedge(), &Lexicon::default()).unwrap();
        let rec = &r.records[0];
        assert_eq!((rec.data_name.as_str(), rec.start_row(), rec.num.clone()), ("Liquidations", 2, Some(vec![18.0])));
    }

    #[test]
    fn trillions_match_a_billion_column() {
        let t = table("Month", &[("Bank balance", Some("CNY Billion"), &[679.0, 700.0, 3050.0, 612.0])]);
        let r = fallback_bind(
            "The bank balance is much lower than CNY 679 billion a year earlier and CNY 3.05 trillion in June.",
            &t,
            &Lexicon::default(),
        )
        .unwrap();
        let nums: Vec<_> = r.records.iter().filter_map(|r| r.num.clone().map(|n| (n[0], r.start_row()))).collect();
        assert_eq!(nums, vec![(679.0, 1), (3050.0, 3)]);
    }

    #[test]
    fn gdp_trends_partition_fall_then_rise() {
        let gdp = [2.0, 2.2, 2.5, 2.7, 3.0, 3.1, 3.2, 0.5, -4.0, -8.0, -2.0, 1.0, 2.0, 2.5];
        let t = table("Quarter", &[("change in GDP", None, &gdp)]);
        let text = "the change in real GDP suffers a sharp decrease then a rise.";
        let r = fallback_bind(text, &t, &Lexicon::default()).unwrap();
        let spans: Vec<_> = r.records.iter().map(|r| (r.trend.clone().unwrap(), r.start_row(), r.end_row())).collect();
        assert_eq!(spans, vec![("sharp decrease".to_string(), 7, 10), ("rise".to_string(), 11, 14)]);
        assert_eq!(r.records[0].object_name, "change in real GDP");
        assert_eq!(r.records[0].text, "the change in real GDP suffers a sharp decrease");
        assert_eq!(r.records[1].text, "then a rise.");
    }

    #[test]
    fn unknown_numbers_are_dropped_with_a_note() {
        let t = table("Quarter", &[("unemployment rate", Some("%"), &[7.4, 7.1, 7.2])]);
        let text = "The unemployment rate inched up to 7.2% from 7.1%, as the number of unemployed people increased by 19 thousand.";
        let r = fallback_bind(text, &t, &Lexicon::default()).unwrap();
        let nums: Vec<f64> = r.records.iter().filter_map(|r| r.num.as_ref().map(|n| n[0])).collect();
        assert_eq!(nums, vec![7.2, 7.1]);
        assert!(r.reason.contains("'19 thousand' does not appear"));
    }

    #[test]
    fn combined_subjects_bind_to_a_derived_column() {
        let t = table("Year", &[("Compact", None, &[10.0, 12.0]), ("Midsize-to-large", None, &[5.0, 6.0])]);
        let r = fallback_bind("In 2002 the mix of compact and midsize-to-large reached 18.", &t, &Lexicon::default()).unwrap();
        let rec = &r.records[0];
        assert_eq!(rec.data_name, "Compact + Midsize-to-large");
        assert_eq!(rec.object_name, "compact and midsize-to-large");
        assert_eq!(rec.start_row(), 2);
        assert!(validate_binding(&r, &t).is_empty());
    }

    #[test]
    fn no_subject_fails() {
        let err = fallback_bind("Nothing to see here.", &hedge(), &Lexicon::default()).unwrap_err();
        assert!(matches!(err, BindError::BindingFailed(_)));
    }

    #[test]
    fn x_labels_disambiguate_rows() {
        let t = table("Year", &[("Coal", None, &[300.0, 250.0, 300.0])]);
        let r = fallback_bind("Coal returns to 300 in 2003.", &t, &Lexicon::default()).unwrap();
        assert_eq!(r.records[0].start_row(), 3);
    }
}
