//! Rectangular typed data tables and their validation.
//!
//! A table is loaded either from comma-separated text with a header row or
//! from a structured JSON document `{name, columns: [{name, kind, unit}], rows}`.
//! In CSV headers a unit may be attached in square brackets, e.g.
//! `Bank balance [CNY Billion]`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Separator used to name a derived column that sums two table columns.
pub const DERIVED_SEPARATOR: &str = " + ";

#[derive(Debug, Error)]
pub enum TableError {
    #[error("failed to read table: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed table document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid table: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Temporal,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
            unit: None,
        }
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    Text(String),
    Null,
}

impl Cell {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Cell::Null)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Number(v) => f.write_str(&format_number(*v)),
            Cell::Text(s) => f.write_str(s),
            Cell::Null => Ok(()),
        }
    }
}

/// Formats a number without a trailing `.0` for integral values.
pub fn format_number(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    pub name: String,
    pub columns: Vec<ColumnMeta>,
    pub rows: Vec<Vec<Cell>>,
}

impl DataTable {
    pub fn new(name: impl Into<String>, columns: Vec<ColumnMeta>, rows: Vec<Vec<Cell>>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows,
        }
    }

    /// Loads a table from disk, choosing the format by extension (`.json`
    /// for the structured document, anything else is read as CSV).
    pub fn load(path: &Path) -> Result<Self, TableError> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "table".to_string());
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_csv_str(&name, &text)
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, TableError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    /// Parses CSV with a header row and infers column kinds.
    pub fn from_csv_str(name: &str, text: &str) -> Result<Self, TableError> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut raw_rows: Vec<Vec<String>> = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            raw_rows.push(record.iter().map(str::to_string).collect());
        }

        let headers = headers.iter().map(|h| split_unit(h)).collect();
        Ok(Self::from_raw(name, headers, raw_rows))
    }

    /// Parses the pipe-separated rendering produced by [`DataTable::digest`].
    /// A trailing parenthetical in a header is read back as the unit.
    pub fn from_digest(name: &str, digest: &str) -> Result<Self, TableError> {
        let mut lines = digest.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| TableError::Invalid(vec!["table digest is empty".into()]))?;
        let split = |l: &str| l.split(" | ").map(|c| c.trim().to_string()).collect::<Vec<_>>();
        let mut headers = split(header);
        if headers.first().map(String::as_str) != Some("Row") {
            return Err(TableError::Invalid(vec!["table digest must start with a Row column".into()]));
        }
        headers.remove(0);
        let headers = headers
            .iter()
            .map(|h| match (h.rfind(" ("), h.ends_with(')')) {
                (Some(open), true) => (h[..open].to_string(), Some(h[open + 2..h.len() - 1].to_string())),
                _ => (h.clone(), None),
            })
            .collect();
        let rows = lines
            .map(|l| {
                let mut cells = split(l);
                if !cells.is_empty() {
                    cells.remove(0);
                }
                cells
            })
            .collect();
        Ok(Self::from_raw(name, headers, rows))
    }

    fn from_raw(name: &str, headers: Vec<(String, Option<String>)>, raw_rows: Vec<Vec<String>>) -> Self {
        let mut columns = Vec::with_capacity(headers.len());
        for (ci, (col_name, unit)) in headers.into_iter().enumerate() {
            let values: Vec<&str> = raw_rows
                .iter()
                .filter_map(|r| r.get(ci).map(String::as_str))
                .filter(|v| !v.is_empty())
                .collect();
            let all_numeric = !values.is_empty() && values.iter().all(|v| parse_cell_number(v).is_some());
            let kind = if looks_temporal_name(&col_name) || (!all_numeric && values.iter().all(|v| looks_temporal_value(v))) {
                ColumnKind::Temporal
            } else if all_numeric {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            };
            columns.push(ColumnMeta {
                name: col_name,
                kind,
                unit,
            });
        }

        let rows = raw_rows
            .into_iter()
            .map(|raw| {
                raw.iter()
                    .enumerate()
                    .map(|(ci, v)| {
                        if v.is_empty() {
                            Cell::Null
                        } else if columns.get(ci).is_some_and(|c| c.kind == ColumnKind::Numeric) {
                            parse_cell_number(v).map(Cell::Number).unwrap_or_else(|| Cell::Text(v.clone()))
                        } else {
                            Cell::Text(v.clone())
                        }
                    })
                    .collect()
            })
            .collect();

        Self {
            name: name.to_string(),
            columns,
            rows,
        }
    }

    /// Loads and validates in one step.
    pub fn load_valid(path: &Path) -> Result<Self, TableError> {
        let table = Self::load(path)?;
        let violations = validate_table(&table);
        if violations.is_empty() {
            Ok(table)
        } else {
            Err(TableError::Invalid(violations))
        }
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnMeta> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn numeric_columns(&self) -> impl Iterator<Item = &ColumnMeta> {
        self.columns.iter().filter(|c| c.kind == ColumnKind::Numeric)
    }

    /// The column used for the x axis: the first non-numeric column.
    pub fn x_column(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.kind != ColumnKind::Numeric)
    }

    /// Display label for a 1-based row: the x-column value, or the row number.
    pub fn x_label(&self, row: usize) -> String {
        match self.x_column() {
            Some(ci) => self.rows[row - 1].get(ci).map(|c| c.to_string()).unwrap_or_default(),
            None => row.to_string(),
        }
    }

    pub fn cell(&self, column: &str, row: usize) -> Option<&Cell> {
        let ci = self.column_index(column)?;
        self.rows.get(row.checked_sub(1)?)?.get(ci)
    }

    /// Numeric values of a column (table or derived), `None` for nulls.
    pub fn numeric_series(&self, name: &str) -> Option<Vec<Option<f64>>> {
        if let Some(ci) = self.column_index(name) {
            if self.columns[ci].kind != ColumnKind::Numeric {
                return None;
            }
            return Some(self.rows.iter().map(|r| r.get(ci).and_then(Cell::as_number)).collect());
        }
        let parts = self.derived_parts(name)?;
        let series: Vec<Vec<Option<f64>>> = parts.iter().map(|p| self.numeric_series(p)).collect::<Option<_>>()?;
        Some(
            (0..self.row_count())
                .map(|r| series.iter().map(|s| s[r]).sum::<Option<f64>>())
                .collect(),
        )
    }

    /// Splits a derived column name into its numeric constituents.
    pub fn derived_parts<'a>(&self, name: &'a str) -> Option<Vec<&'a str>> {
        if self.column_index(name).is_some() || !name.contains(DERIVED_SEPARATOR) {
            return None;
        }
        let parts: Vec<&str> = name.split(DERIVED_SEPARATOR).collect();
        let ok = parts.len() >= 2
            && parts
                .iter()
                .all(|p| self.column(p).is_some_and(|c| c.kind == ColumnKind::Numeric));
        ok.then_some(parts)
    }

    /// True if `name` is a table column or a valid derived sum of columns.
    pub fn resolves_column(&self, name: &str) -> bool {
        self.column_index(name).is_some() || self.derived_parts(name).is_some()
    }

    /// Returns a copy with the given derived columns materialized.
    pub fn with_derived(&self, names: &[String]) -> DataTable {
        let mut out = self.clone();
        for name in names {
            if out.column_index(name).is_some() {
                continue;
            }
            let Some(parts) = self.derived_parts(name) else { continue };
            let Some(series) = self.numeric_series(name) else { continue };
            let unit = self.column(parts[0]).and_then(|c| c.unit.clone());
            out.columns.push(ColumnMeta {
                name: name.clone(),
                kind: ColumnKind::Numeric,
                unit,
            });
            for (row, v) in out.rows.iter_mut().zip(series) {
                row.push(v.map(Cell::Number).unwrap_or(Cell::Null));
            }
        }
        out
    }

    /// Compact pipe-separated rendering with 1-based row numbers, used in
    /// prompts and as a stable digest of the table content.
    pub fn digest(&self) -> String {
        let mut out = String::new();
        out.push_str("Row");
        for c in &self.columns {
            out.push_str(" | ");
            out.push_str(&c.name);
            if let Some(u) = &c.unit {
                out.push_str(&format!(" ({u})"));
            }
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&(i + 1).to_string());
            for cell in row {
                out.push_str(" | ");
                out.push_str(&cell.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Serializes as CSV with `[unit]` header suffixes.
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|c| match &c.unit {
                Some(u) => format!("{} [{u}]", c.name),
                None => c.name.clone(),
            })
            .collect();
        writer.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            writer
                .write_record(row.iter().map(|c| c.to_string()))
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("flush")).expect("utf8")
    }
}

fn split_unit(header: &str) -> (String, Option<String>) {
    let h = header.trim();
    if let (Some(open), true) = (h.rfind('['), h.ends_with(']')) {
        let unit = h[open + 1..h.len() - 1].trim();
        let name = h[..open].trim();
        if !unit.is_empty() && !name.is_empty() {
            return (name.to_string(), Some(unit.to_string()));
        }
    }
    (h.to_string(), None)
}

fn parse_cell_number(v: &str) -> Option<f64> {
    let cleaned: String = v.chars().filter(|c| *c != ',' && *c != '_').collect();
    cleaned.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn looks_temporal_name(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    ["year", "date", "quarter", "month", "period", "time", "week", "day"]
        .iter()
        .any(|k| lower.split(|c: char| !c.is_alphanumeric()).any(|t| t == *k || t == format!("{k}s")))
}

fn looks_temporal_value(v: &str) -> bool {
    let t = v.trim();
    let bytes = t.as_bytes();
    let is_year = |s: &str| s.len() == 4 && s.chars().all(|c| c.is_ascii_digit()) && (s.starts_with("19") || s.starts_with("20"));
    if is_year(t) {
        return true;
    }
    // Q1 2023, 2023Q1, 2023-01, 2023-01-31, Jan 2023
    if t.len() >= 6 && (bytes[0] == b'Q' || bytes[0] == b'q') && t[1..2].chars().all(|c| c.is_ascii_digit()) {
        return true;
    }
    if t.len() >= 6 && is_year(&t[..4]) && matches!(bytes[4], b'-' | b'/' | b'Q' | b'q' | b'M') {
        return true;
    }
    const MONTHS: [&str; 12] = ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"];
    let lower = t.to_ascii_lowercase();
    MONTHS.iter().any(|m| lower.starts_with(m)) && t.chars().any(|c| c.is_ascii_digit())
}

/// Checks every table invariant; an empty list means the table is valid.
pub fn validate_table(table: &DataTable) -> Vec<String> {
    let mut violations = Vec::new();
    if table.columns.is_empty() {
        violations.push("table has no columns".to_string());
    }
    if table.rows.is_empty() {
        violations.push("table has no rows".to_string());
    }
    let mut seen = HashSet::new();
    for (i, c) in table.columns.iter().enumerate() {
        if c.name.trim().is_empty() {
            violations.push(format!("column {}: empty name", i + 1));
        } else if !seen.insert(c.name.as_str()) {
            violations.push(format!("duplicate column name \"{}\"", c.name));
        }
    }
    let width = table.columns.len();
    for (ri, row) in table.rows.iter().enumerate() {
        if row.len() != width {
            violations.push(format!("row {}: expected {} cells, got {}", ri + 1, width, row.len()));
            continue;
        }
        for (ci, cell) in row.iter().enumerate() {
            let col = &table.columns[ci];
            if col.kind == ColumnKind::Numeric {
                match cell {
                    Cell::Number(v) if !v.is_finite() => violations.push(format!(
                        "column \"{}\" row {}: non-finite number",
                        col.name,
                        ri + 1
                    )),
                    Cell::Text(_) => violations.push(format!(
                        "column \"{}\" row {}: non-numeric value in numeric column",
                        col.name,
                        ri + 1
                    )),
                    _ => {}
                }
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(v: f64) -> Cell {
        Cell::Number(v)
    }

    fn three_by_three() -> DataTable {
        DataTable::new(
            "t",
            vec![
                ColumnMeta::new("Active", ColumnKind::Numeric),
                ColumnMeta::new("Launches", ColumnKind::Numeric),
                ColumnMeta::new("Liquidations", ColumnKind::Numeric),
            ],
            vec![
                vec![num(1.0), num(5.0), num(2.0)],
                vec![num(2.0), num(6.0), num(18.0)],
                vec![num(669.0), num(7.0), num(4.0)],
            ],
        )
    }

    #[test]
    fn digest_round_trips() {
        let t = DataTable::from_csv_str("b", "Month,Bank balance [CNY Billion]\nJun 2023,3050\nJul 2023,\n").unwrap();
        let back = DataTable::from_digest("b", &t.digest()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn well_formed_table_has_no_violations() {
        assert!(validate_table(&three_by_three()).is_empty());
    }

    #[test]
    fn ragged_row_is_reported() {
        let mut t = three_by_three();
        t.rows[1].pop();
        assert_eq!(validate_table(&t), vec!["row 2: expected 3 cells, got 2".to_string()]);
    }

    #[test]
    fn duplicate_column_names_are_reported_once() {
        let mut t = three_by_three();
        t.columns[1].name = "Active".into();
        let v = validate_table(&t);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("duplicate") && v[0].contains("Active"));
    }

    #[test]
    fn empty_table_reports_both_dimensions() {
        let t = DataTable::new("e", vec![], vec![]);
        assert_eq!(validate_table(&t).len(), 2);
    }

    #[test]
    fn text_in_numeric_column_is_reported() {
        let mut t = three_by_three();
        t.rows[2][0] = Cell::Text("n/a".into());
        let v = validate_table(&t);
        assert_eq!(v, vec!["column \"Active\" row 3: non-numeric value in numeric column".to_string()]);
    }

    #[test]
    fn csv_inference_and_units() {
        let csv = "Month,Bank balance [CNY Billion],Region\n2023-06,3050.0,North\n2023-07,\"1,200\",South\n";
        let t = DataTable::from_csv_str("bank", csv).unwrap();
        assert_eq!(t.columns[0].kind, ColumnKind::Temporal);
        assert_eq!(t.columns[1].kind, ColumnKind::Numeric);
        assert_eq!(t.columns[1].name, "Bank balance");
        assert_eq!(t.columns[1].unit.as_deref(), Some("CNY Billion"));
        assert_eq!(t.columns[2].kind, ColumnKind::Categorical);
        assert_eq!(t.rows[1][1], Cell::Number(1200.0));
        assert!(validate_table(&t).is_empty());
        let back = DataTable::from_csv_str("bank", &t.to_csv_string()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn year_column_is_temporal_even_when_numeric() {
        let t = DataTable::from_csv_str("y", "Year,GDP\n2020,1\n2021,2\n").unwrap();
        assert_eq!(t.columns[0].kind, ColumnKind::Temporal);
        assert_eq!(t.x_label(2), "2021");
    }

    #[test]
    fn derived_column_sums_rowwise_and_propagates_nulls() {
        let mut t = three_by_three();
        t.rows[0][1] = Cell::Null;
        let s = t.numeric_series("Active + Launches").unwrap();
        assert_eq!(s, vec![None, Some(8.0), Some(676.0)]);
        assert!(t.resolves_column("Active + Launches"));
        assert!(!t.resolves_column("Active + Missing"));
        let m = t.with_derived(&["Active + Launches".to_string()]);
        assert_eq!(m.columns.len(), 4);
        assert!(validate_table(&m).is_empty());
    }

    #[test]
    fn json_document_round_trips() {
        let t = three_by_three();
        let back = DataTable::from_json_str(&t.to_json_string()).unwrap();
        assert_eq!(back, t);
    }
}
