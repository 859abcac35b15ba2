//! Text-data binding records and their validation against a table.

use std::fmt;

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::table::DataTable;

/// A cell reference with a 1-based row index, serialized as `["column", row]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellRef {
    pub column: String,
    pub row: usize,
}

impl CellRef {
    pub fn new(column: impl Into<String>, row: usize) -> Self {
        Self {
            column: column.into(),
            row,
        }
    }
}

impl Serialize for CellRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(2)?;
        t.serialize_element(&self.column)?;
        t.serialize_element(&self.row)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for CellRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CellRefVisitor;
        impl<'de> Visitor<'de> for CellRefVisitor {
            type Value = CellRef;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a [column, row] pair")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<CellRef, A::Error> {
                let column: String = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let row: usize = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                Ok(CellRef { column, row })
            }
        }
        deserializer.deserialize_tuple(2, CellRefVisitor)
    }
}

/// One claim of the narrative bound to table cells.
///
/// Exactly one of `trend` / `num` is populated in a valid record. `position`
/// holds the start and end cells; they are equal for point references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingRecord {
    #[serde(rename = "ObjectName")]
    pub object_name: String,
    #[serde(rename = "DataName")]
    pub data_name: String,
    #[serde(rename = "Position")]
    pub position: [CellRef; 2],
    #[serde(rename = "Trend", default)]
    pub trend: Option<String>,
    #[serde(rename = "Num", default)]
    pub num: Option<Vec<f64>>,
    #[serde(rename = "Text")]
    pub text: String,
}

impl BindingRecord {
    pub fn numeric(object_name: &str, column: &str, row: usize, value: f64, text: &str) -> Self {
        Self {
            object_name: object_name.to_string(),
            data_name: column.to_string(),
            position: [CellRef::new(column, row), CellRef::new(column, row)],
            trend: None,
            num: Some(vec![value]),
            text: text.to_string(),
        }
    }

    pub fn trend(object_name: &str, column: &str, start: usize, end: usize, trend: &str, text: &str) -> Self {
        Self {
            object_name: object_name.to_string(),
            data_name: column.to_string(),
            position: [CellRef::new(column, start), CellRef::new(column, end)],
            trend: Some(trend.to_string()),
            num: None,
            text: text.to_string(),
        }
    }

    pub fn start_row(&self) -> usize {
        self.position[0].row
    }

    pub fn end_row(&self) -> usize {
        self.position[1].row
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BindingResult {
    pub records: Vec<BindingRecord>,
    #[serde(rename = "Reason")]
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabKind {
    Subject,
    Trend,
    Numerical,
}

impl VocabKind {
    pub const ALL: [VocabKind; 3] = [VocabKind::Subject, VocabKind::Trend, VocabKind::Numerical];

    pub fn as_str(self) -> &'static str {
        match self {
            VocabKind::Subject => "subject",
            VocabKind::Trend => "trend",
            VocabKind::Numerical => "numerical",
        }
    }
}

/// A vocabulary occurrence in narrative text. Offsets count Unicode scalar
/// values (chars), not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VocabSpan {
    pub kind: VocabKind,
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl VocabSpan {
    /// Builds a span from byte offsets into `narrative`.
    pub fn from_bytes(kind: VocabKind, narrative: &str, start: usize, end: usize) -> Self {
        let char_start = narrative[..start].chars().count();
        let text = narrative[start..end].to_string();
        let char_end = char_start + text.chars().count();
        Self {
            kind,
            text,
            char_start,
            char_end,
        }
    }

    /// True if the span satisfies its offset invariants against `narrative`.
    pub fn is_consistent(&self, narrative: &str) -> bool {
        let len = narrative.chars().count();
        self.char_start < self.char_end
            && self.char_end <= len
            && narrative
                .chars()
                .skip(self.char_start)
                .take(self.char_end - self.char_start)
                .eq(self.text.chars())
    }
}

/// Checks every record of `result` against `table`; an empty list means valid.
pub fn validate_binding(result: &BindingResult, table: &DataTable) -> Vec<String> {
    let mut violations = Vec::new();
    let rows = table.row_count();
    for (i, rec) in result.records.iter().enumerate() {
        let label = format!("record {}", i + 1);
        match (&rec.trend, &rec.num) {
            (Some(_), Some(_)) => violations.push(format!("{label}: Trend and Num are both populated")),
            (None, None) => violations.push(format!("{label}: neither Trend nor Num is populated")),
            _ => {}
        }
        if let Some(nums) = &rec.num {
            if nums.is_empty() {
                violations.push(format!("{label}: Num is an empty list"));
            }
            if nums.iter().any(|v| !v.is_finite()) {
                violations.push(format!("{label}: Num contains a non-finite value"));
            }
        }
        if rec.object_name.trim().is_empty() {
            violations.push(format!("{label}: empty ObjectName"));
        }
        if !table.resolves_column(&rec.data_name) {
            violations.push(format!("{label}: DataName \"{}\" is not a table column", rec.data_name));
        }
        for (pi, cell) in rec.position.iter().enumerate() {
            if cell.column != rec.data_name {
                violations.push(format!(
                    "{label}: position {} references column \"{}\" instead of \"{}\"",
                    pi + 1,
                    cell.column,
                    rec.data_name
                ));
            }
            if cell.row == 0 || cell.row > rows {
                violations.push(format!(
                    "{label}: position {} row {} is out of range 1..={rows}",
                    pi + 1,
                    cell.row
                ));
            }
        }
        if rec.position[0].row > rec.position[1].row {
            violations.push(format!(
                "{label}: start row {} is after end row {}",
                rec.position[0].row, rec.position[1].row
            ));
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Cell, ColumnKind, ColumnMeta};

    fn gdp_table() -> DataTable {
        DataTable::new(
            "gdp",
            vec![
                ColumnMeta::new("Quarter", ColumnKind::Temporal),
                ColumnMeta::new("change in GDP", ColumnKind::Numeric),
            ],
            (1..=14)
                .map(|i| vec![Cell::Text(format!("Q{i}")), Cell::Number(i as f64)])
                .collect(),
        )
    }

    #[test]
    fn appendix_gdp_records_validate() {
        let result = BindingResult {
            records: vec![
                BindingRecord::trend("change in real GDP", "change in GDP", 7, 10, "sharp decrease", "x"),
                BindingRecord::trend("change in real GDP", "change in GDP", 11, 14, "rise", "then a rise."),
            ],
            reason: "r".into(),
        };
        assert!(validate_binding(&result, &gdp_table()).is_empty());
    }

    #[test]
    fn both_trend_and_num_is_one_violation() {
        let mut rec = BindingRecord::trend("o", "change in GDP", 1, 2, "rise", "t");
        rec.num = Some(vec![5.0]);
        let v = validate_binding(
            &BindingResult {
                records: vec![rec],
                reason: String::new(),
            },
            &gdp_table(),
        );
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("both"));
    }

    #[test]
    fn out_of_range_row_is_one_violation() {
        let rec = BindingRecord::numeric("o", "change in GDP", 99, 1.0, "t");
        let mut rec2 = rec.clone();
        rec2.position[0].row = 1;
        let v = validate_binding(
            &BindingResult {
                records: vec![rec2],
                reason: String::new(),
            },
            &gdp_table(),
        );
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("row 99"));
    }

    #[test]
    fn reversed_and_foreign_positions_are_flagged() {
        let mut rec = BindingRecord::trend("o", "change in GDP", 5, 3, "rise", "t");
        rec.position[1].column = "Quarter".into();
        let v = validate_binding(
            &BindingResult {
                records: vec![rec],
                reason: String::new(),
            },
            &gdp_table(),
        );
        assert_eq!(v.len(), 2, "{v:?}");
    }

    #[test]
    fn cellref_serializes_as_pair() {
        let c = CellRef::new("Active", 3);
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"["Active",3]"#);
        let back: CellRef = serde_json::from_str(r#"["Active",3]"#).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn vocab_span_offsets_count_chars() {
        let text = "Größe rose 5%";
        let start = text.find("rose").unwrap();
        let s = VocabSpan::from_bytes(VocabKind::Trend, text, start, start + 4);
        assert_eq!((s.char_start, s.char_end), (6, 10));
        assert!(s.is_consistent(text));
    }
}
