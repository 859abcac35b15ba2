//! Graphical overlays: the default overlay combination for each kind of bound
//! vocabulary, their placement on a base chart, and their colors.
//!
//! | vocabulary                 | overlays                               |
//! |----------------------------|----------------------------------------|
//! | subject                    | highlight                              |
//! | numerical                  | highlight, marker, label               |
//! | trend, change pattern      | highlight, trend_line, description     |
//! | trend, summary indicator   | highlight, overall_indicator           |
//! | trend, special event       | highlight, special_time_point          |
//!
//! A trend phrase missing from the lexicon is treated as a change pattern.

mod palette;
mod place;

use serde::{Deserialize, Serialize};

pub use palette::{apply_palette, Palette, PaletteError};
pub use place::{place_overlays, text_box_size, PlacedOverlay, PlacementError, Shape, Style};

use crate::binding::{BindingRecord, BindingResult};
use crate::color::Rgb;
use crate::render::Point;
use crate::table::{format_number, DataTable};
use crate::trend::{classify_trend, summary_statistic, Lexicon, PatternId, TrendKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlayKind {
    Highlight,
    BoundingBox,
    Background,
    Marker,
    Label,
    Description,
    TrendLine,
    OverallIndicator,
    SpecialTimePoint,
}

impl OverlayKind {
    pub const ALL: [OverlayKind; 9] = [
        OverlayKind::Highlight,
        OverlayKind::BoundingBox,
        OverlayKind::Background,
        OverlayKind::Marker,
        OverlayKind::Label,
        OverlayKind::Description,
        OverlayKind::TrendLine,
        OverlayKind::OverallIndicator,
        OverlayKind::SpecialTimePoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OverlayKind::Highlight => "highlight",
            OverlayKind::BoundingBox => "bounding_box",
            OverlayKind::Background => "background",
            OverlayKind::Marker => "marker",
            OverlayKind::Label => "label",
            OverlayKind::Description => "description",
            OverlayKind::TrendLine => "trend_line",
            OverlayKind::OverallIndicator => "overall_indicator",
            OverlayKind::SpecialTimePoint => "special_time_point",
        }
    }

    /// Kinds drawn as a text box.
    pub fn is_text(self) -> bool {
        matches!(self, OverlayKind::Label | OverlayKind::Description)
    }
}

/// Columns and the inclusive 1-based row range an overlay refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlayTarget {
    pub columns: Vec<String>,
    pub start_row: usize,
    pub end_row: usize,
}

impl OverlayTarget {
    pub fn cell(column: &str, row: usize) -> Self {
        Self {
            columns: vec![column.to_string()],
            start_row: row,
            end_row: row,
        }
    }

    pub fn rows(column: &str, start_row: usize, end_row: usize) -> Self {
        Self {
            columns: vec![column.to_string()],
            start_row,
            end_row,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    Mean,
    Max,
    Min,
}

impl StatisticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StatisticKind::Mean => "mean",
            StatisticKind::Max => "max",
            StatisticKind::Min => "min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub kind: StatisticKind,
    pub value: f64,
}

/// User adjustments that take precedence over computed placement and style.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManualAdjust {
    /// Top-left corner of a text box, or the center of a marker.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stroke_color: Option<Rgb>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill_color: Option<Rgb>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stroke_width: Option<f64>,
    /// Marker radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<f64>,
}

impl ManualAdjust {
    pub fn is_empty(&self) -> bool {
        *self == ManualAdjust::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlaySpec {
    pub id: String,
    pub kind: OverlayKind,
    pub target: OverlayTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_content: Option<String>,
    /// Resolved from the plotted values at placement when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<Statistic>,
    /// Index of the binding record this overlay was compiled from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_record: Option<usize>,
    #[serde(default, skip_serializing_if = "ManualAdjust::is_empty")]
    pub manual: ManualAdjust,
}

impl OverlaySpec {
    pub fn new(kind: OverlayKind, target: OverlayTarget) -> Self {
        Self {
            id: String::new(),
            kind,
            target,
            text_content: None,
            statistic: None,
            source_record: None,
            manual: ManualAdjust::default(),
        }
    }

    fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text_content = Some(text.into());
        self
    }

    /// Checks the text-length rules of labels and descriptions.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let words = self.text_content.as_deref().map_or(0, word_count);
        match self.kind {
            OverlayKind::Label if words > 3 => v.push(format!("{}: label has {words} words", self.id)),
            OverlayKind::Description => {
                let text = self.text_content.as_deref().unwrap_or("");
                if words <= 3 && !is_sentence(text) {
                    v.push(format!("{}: description is neither over three words nor a sentence", self.id));
                }
            }
            _ => {}
        }
        if self.target.start_row == 0 || self.target.start_row > self.target.end_row {
            v.push(format!("{}: invalid row range", self.id));
        }
        v
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

fn is_sentence(text: &str) -> bool {
    let t = text.trim();
    t.chars().next().is_some_and(char::is_alphanumeric) && t.ends_with(['.', '!', '?'])
}

fn description_text(text: &str) -> String {
    let t = text.trim();
    if word_count(t) > 3 || is_sentence(t) {
        t.to_string()
    } else {
        format!("{}.", t.trim_end_matches(|c: char| !c.is_alphanumeric()))
    }
}

/// The default overlay combination for one record. `trend_kind` is the
/// lexicon class of the record's trend phrase, if any.
pub fn overlays_for(record: &BindingRecord, trend_kind: Option<TrendKind>) -> Vec<OverlaySpec> {
    let column = record.data_name.as_str();
    let (start, end) = (record.start_row(), record.end_row());
    let mut out = vec![OverlaySpec::new(OverlayKind::Highlight, OverlayTarget::rows(column, start, end))];
    if let Some(values) = &record.num {
        for row in start..=end {
            let value = values.get(row - start).or(values.first()).copied();
            out.push(OverlaySpec::new(OverlayKind::Marker, OverlayTarget::cell(column, row)));
            let mut label = OverlaySpec::new(OverlayKind::Label, OverlayTarget::cell(column, row));
            label.text_content = value.map(format_number);
            out.push(label);
        }
    } else if record.trend.is_some() {
        match trend_kind.unwrap_or(TrendKind::ChangePattern) {
            TrendKind::ChangePattern => {
                out.push(OverlaySpec::new(OverlayKind::TrendLine, OverlayTarget::rows(column, start, end)));
                out.push(
                    OverlaySpec::new(OverlayKind::Description, OverlayTarget::rows(column, start, end))
                        .with_text(description_text(&record.text)),
                );
            }
            TrendKind::SummaryIndicator => {
                out.push(OverlaySpec::new(OverlayKind::OverallIndicator, OverlayTarget::rows(column, start, end)));
            }
            TrendKind::SpecialEvent => {
                out.push(OverlaySpec::new(OverlayKind::SpecialTimePoint, OverlayTarget::cell(column, start)));
            }
        }
    }
    out
}

fn statistic_kind(pattern: Option<PatternId>) -> StatisticKind {
    match pattern {
        Some(PatternId::GlobalMax) => StatisticKind::Max,
        Some(PatternId::GlobalMin) => StatisticKind::Min,
        _ => StatisticKind::Mean,
    }
}

/// Compiles a narrative's binding result into overlay specs with ids
/// `o0, o1, …`. Highlights repeat once per column; overall indicators carry
/// the statistic computed on the bound column over the whole table.
pub fn compile_overlays(result: &BindingResult, table: &DataTable, lexicon: &Lexicon) -> Vec<OverlaySpec> {
    let mut out: Vec<OverlaySpec> = Vec::new();
    for (i, rec) in result.records.iter().enumerate() {
        let class = rec.trend.as_deref().and_then(|t| classify_trend(t, lexicon));
        for mut spec in overlays_for(rec, class.map(|c| c.1)) {
            if spec.kind == OverlayKind::Highlight {
                if out
                    .iter()
                    .any(|o| o.kind == OverlayKind::Highlight && o.target.columns == spec.target.columns)
                {
                    continue;
                }
                let rows = table.row_count();
                spec.target.start_row = 1;
                spec.target.end_row = rows.max(1);
            }
            if spec.kind == OverlayKind::OverallIndicator {
                let kind = statistic_kind(class.map(|c| c.0));
                let pattern = match kind {
                    StatisticKind::Mean => PatternId::MeanLevel,
                    StatisticKind::Max => PatternId::GlobalMax,
                    StatisticKind::Min => PatternId::GlobalMin,
                };
                let value = table
                    .numeric_series(&rec.data_name)
                    .and_then(|s| summary_statistic(&s, pattern).ok())
                    .map(|(v, _)| v);
                spec.statistic = value.map(|value| Statistic { kind, value });
                spec.text_content = value.map(|v| format!("{} {}", kind.as_str(), format_number(round_to(v, 2))));
            }
            spec.id = format!("o{}", out.len());
            spec.source_record = Some(i);
            out.push(spec);
        }
    }
    out
}

fn round_to(v: f64, digits: i32) -> f64 {
    let f = 10f64.powi(digits);
    (v * f).round() / f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(specs: &[OverlaySpec]) -> Vec<OverlayKind> {
        specs.iter().map(|s| s.kind).collect()
    }

    #[test]
    fn numerical_record_gets_marker_and_label() {
        let rec = BindingRecord::numeric("active funds", "Active", 3, 669.0, "reached 669");
        let specs = overlays_for(&rec, None);
        assert_eq!(kinds(&specs), [OverlayKind::Highlight, OverlayKind::Marker, OverlayKind::Label]);
        assert_eq!(specs[1].target, OverlayTarget::cell("Active", 3));
        assert_eq!(specs[2].text_content.as_deref(), Some("669"));
    }

    #[test]
    fn change_pattern_gets_trend_line_and_description() {
        let rec = BindingRecord::trend(
            "change in real GDP",
            "change in GDP",
            7,
            10,
            "sharp decrease",
            "the change in real GDP suffers a sharp decrease",
        );
        let specs = overlays_for(&rec, Some(TrendKind::ChangePattern));
        assert_eq!(kinds(&specs), [OverlayKind::Highlight, OverlayKind::TrendLine, OverlayKind::Description]);
        assert_eq!(specs[1].target, OverlayTarget::rows("change in GDP", 7, 10));
        assert!(specs[2].violations().is_empty());
    }

    #[test]
    fn short_description_becomes_a_sentence() {
        let rec = BindingRecord::trend("x", "A", 1, 2, "rise", "then a rise");
        let d = &overlays_for(&rec, None)[2];
        assert_eq!(d.text_content.as_deref(), Some("then a rise."));
        assert!(d.violations().is_empty());
    }

    #[test]
    fn compile_dedups_highlights_and_numbers_ids() {
        let table = DataTable::from_csv_str("t", "Year,A\n2001,1\n2002,4\n2003,2\n").unwrap();
        let result = BindingResult {
            records: vec![
                BindingRecord::numeric("a", "A", 2, 4.0, "4"),
                BindingRecord::trend("a", "A", 1, 3, "on average", "a averaged 2.33"),
            ],
            reason: "r".into(),
        };
        let specs = compile_overlays(&result, &table, &Lexicon::default());
        assert_eq!(
            kinds(&specs),
            [OverlayKind::Highlight, OverlayKind::Marker, OverlayKind::Label, OverlayKind::OverallIndicator]
        );
        assert_eq!(specs.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["o0", "o1", "o2", "o3"]);
        let stat = specs[3].statistic.unwrap();
        assert_eq!(stat.kind, StatisticKind::Mean);
        assert!((stat.value - 7.0 / 3.0).abs() < 1e-12);
        assert_eq!(specs[3].source_record, Some(1));
        assert_eq!((specs[0].target.start_row, specs[0].target.end_row), (1, 3));
    }

    #[test]
    fn label_word_limit() {
        let mut s = OverlaySpec::new(OverlayKind::Label, OverlayTarget::cell("A", 1));
        s.text_content = Some("one two three four".into());
        assert_eq!(s.violations().len(), 1);
    }
}
