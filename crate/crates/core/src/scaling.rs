//! Table-size scaling harness: grows a base table with random rows and
//! columns, binds generated probe narratives with known answers against each
//! size on a (rows, cols) grid, and reports the fraction bound correctly.
//!
//! Growth happens once, to the largest grid size; each grid cell uses the
//! first `cols` numeric columns and the first `rows` rows, so cells are
//! nested. Generated values have one decimal, lie in [0.1, 999.9] and are
//! unique within their column, so every probe has exactly one answer.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::binder::{bind, BindConfig, BindContext, LlmProvider, Narrative, PromptDb};
use crate::binding::BindingResult;
use crate::table::{format_number, Cell, ColumnKind, ColumnMeta, DataTable};
use crate::trend::Lexicon;

/// Names given to added columns, in order; chosen to share no word with
/// each other.
const EXTRA_COLUMNS: [&str; 24] = [
    "Hydro", "Wind", "Solar", "Biomass", "Geothermal", "Tidal", "Hydrogen", "Diesel", "Peat", "Waste", "Imports",
    "Exports", "Payroll", "Dividends", "Royalties", "Tariffs", "Freight", "Tourism", "Deposits", "Loans", "Rent",
    "Insurance", "Shipping", "Mining",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalingError {
    #[error("base table has no numeric column")]
    NoNumericColumn,
    #[error("grid asks for {0} columns; at most {1} are available")]
    TooManyColumns(usize, usize),
    #[error("empty grid: {0}")]
    EmptyGrid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub cols: RangeInclusive<usize>,
    pub col_step: usize,
    pub rows: RangeInclusive<usize>,
    pub row_step: usize,
    pub probes_per_cell: usize,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            cols: 2..=10,
            col_step: 1,
            rows: 20..=200,
            row_step: 20,
            probes_per_cell: 10,
            seed: 7,
        }
    }
}

impl ScalingConfig {
    pub fn grid(&self) -> Vec<(usize, usize)> {
        let cols: Vec<usize> = self.cols.clone().step_by(self.col_step.max(1)).collect();
        let rows: Vec<usize> = self.rows.clone().step_by(self.row_step.max(1)).collect();
        rows.iter().flat_map(|&r| cols.iter().map(move |&c| (r, c))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub rows: usize,
    pub cols: usize,
    pub probes: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// A generated narrative and the cell a correct binding must reach.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub text: String,
    pub column: String,
    pub row: usize,
    pub kind: ProbeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    /// A value at a named row.
    Point,
    /// The column maximum.
    Highest,
}

fn walk(rng: &mut ChaCha8Rng, last: f64, used: &mut BTreeSet<i64>) -> f64 {
    let step = (0.08 * last.abs()).max(1.0);
    let mut v = last + rng.gen_range(-step..=step);
    if v < 0.1 {
        v = 0.2 - v;
    }
    if v > 999.9 {
        v = 1999.8 - v;
    }
    let mut tenths = (v * 10.0).round().clamp(1.0, 9999.0) as i64;
    while !used.insert(tenths) {
        tenths = if tenths >= 9999 { 1 } else { tenths + 1 };
    }
    tenths as f64 / 10.0
}

fn next_label(labels: &[String]) -> String {
    let nums: Option<Vec<i64>> = labels.iter().map(|l| l.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some([.., a, b]) => (b + (b - a).max(1)).to_string(),
        Some([b]) => (b + 1).to_string(),
        _ => format!("R{}", labels.len() + 1),
    }
}

/// Extends `base` to `rows` rows and `cols` numeric columns. Existing cells
/// are kept; nulls in base columns stay null.
pub fn grow_table(base: &DataTable, rows: usize, cols: usize, seed: u64) -> Result<DataTable, ScalingError> {
    let numeric: Vec<&ColumnMeta> = base.numeric_columns().collect();
    let first = *numeric.first().ok_or(ScalingError::NoNumericColumn)?;
    let taken: BTreeSet<String> = base.columns.iter().map(|c| c.name.to_lowercase()).collect();
    let extra: Vec<&str> = EXTRA_COLUMNS
        .iter()
        .copied()
        .filter(|n| !taken.contains(&n.to_lowercase()))
        .collect();
    let available = numeric.len() + extra.len();
    if cols > available {
        return Err(ScalingError::TooManyColumns(cols, available));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = base.x_column();
    let mut labels: Vec<String> = (1..=base.row_count()).map(|r| base.x_label(r)).collect();
    while labels.len() < rows {
        labels.push(next_label(&labels));
    }
    let n_rows = rows.max(base.row_count());

    let all: Vec<f64> = numeric
        .iter()
        .filter_map(|c| base.numeric_series(&c.name))
        .flatten()
        .flatten()
        .collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min).clamp(1.0, 900.0);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max).clamp(lo + 10.0, 999.0);

    let mut columns: Vec<ColumnMeta> = Vec::new();
    let mut series: Vec<Vec<Cell>> = Vec::new();
    if let Some(i) = x {
        columns.push(base.columns[i].clone());
        series.push(labels.iter().take(n_rows).map(|l| Cell::Text(l.clone())).collect());
    } else {
        columns.push(ColumnMeta::new("Row", ColumnKind::Temporal));
        series.push(labels.iter().take(n_rows).map(|l| Cell::Text(l.clone())).collect());
    }
    for c in numeric.iter().take(cols.max(1)) {
        let existing = base.numeric_series(&c.name).unwrap_or_default();
        let mut used: BTreeSet<i64> = existing.iter().flatten().map(|v| (v * 10.0).round() as i64).collect();
        let mut last = existing.iter().rev().flatten().next().copied().unwrap_or((lo + hi) / 2.0);
        let mut cells: Vec<Cell> = existing.iter().map(|v| v.map_or(Cell::Null, Cell::Number)).collect();
        while cells.len() < n_rows {
            last = walk(&mut rng, last, &mut used);
            cells.push(Cell::Number(last));
        }
        columns.push((*c).clone());
        series.push(cells);
    }
    for name in extra.iter().take(cols.saturating_sub(numeric.len())) {
        let mut used = BTreeSet::new();
        let mut last = rng.gen_range(lo..=hi);
        let mut cells = Vec::with_capacity(n_rows);
        for _ in 0..n_rows {
            last = walk(&mut rng, last, &mut used);
            cells.push(Cell::Number(last));
        }
        let mut meta = ColumnMeta::new(*name, ColumnKind::Numeric);
        meta.unit = first.unit.clone();
        columns.push(meta);
        series.push(cells);
    }
    let table_rows = (0..n_rows).map(|r| series.iter().map(|s| s[r].clone()).collect()).collect();
    Ok(DataTable::new(base.name.clone(), columns, table_rows))
}

/// The first `rows` rows and first `cols` numeric columns of `table`.
pub fn sub_table(table: &DataTable, rows: usize, cols: usize) -> DataTable {
    let keep: Vec<usize> = table
        .columns
        .iter()
        .enumerate()
        .scan(0usize, |n, (i, c)| {
            if c.kind == ColumnKind::Numeric {
                *n += 1;
                Some((i, *n <= cols))
            } else {
                Some((i, true))
            }
        })
        .filter(|(_, k)| *k)
        .map(|(i, _)| i)
        .collect();
    DataTable::new(
        table.name.clone(),
        keep.iter().map(|&i| table.columns[i].clone()).collect(),
        table.rows.iter().take(rows).map(|r| keep.iter().map(|&i| r[i].clone()).collect()).collect(),
    )
}

/// `n` probes over non-null cells of `table`.
pub fn make_probes(table: &DataTable, n: usize, seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns: Vec<(String, Vec<(usize, f64)>)> = table
        .numeric_columns()
        .filter_map(|c| {
            let cells: Vec<(usize, f64)> = table
                .numeric_series(&c.name)?
                .into_iter()
                .enumerate()
                .filter_map(|(i, v)| v.map(|v| (i + 1, v)))
                .collect();
            (!cells.is_empty()).then(|| (c.name.clone(), cells))
        })
        .collect();
    if columns.is_empty() {
        return vec![];
    }
    (0..n)
        .map(|i| {
            let (name, cells) = columns.choose(&mut rng).expect("non-empty");
            if i % 4 == 3 {
                let &(row, v) = cells.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
                Probe {
                    text: format!("{name} hit its highest level of {} in {}.", format_number(v), table.x_label(row)),
                    column: name.clone(),
                    row,
                    kind: ProbeKind::Highest,
                }
            } else {
                let &(row, v) = cells.choose(&mut rng).expect("non-empty");
                Probe {
                    text: format!("In {}, {name} stood at {}.", table.x_label(row), format_number(v)),
                    column: name.clone(),
                    row,
                    kind: ProbeKind::Point,
                }
            }
        })
        .collect()
}

/// True if `result` binds the probe's subject to its answer cell.
pub fn probe_correct(probe: &Probe, result: &BindingResult) -> bool {
    result.records.iter().any(|r| {
        let at_row = r.position[0].row == probe.row && r.position[1].row == probe.row;
        let kind_ok = match probe.kind {
            ProbeKind::Point => r.num.is_some(),
            ProbeKind::Highest => r.trend.is_some(),
        };
        r.data_name == probe.column && at_row && kind_ok
    })
}

/// Everything besides the grid that binding needs.
pub struct ScalingContext<'a> {
    pub provider: &'a dyn LlmProvider,
    pub db: &'a PromptDb,
    pub lexicon: &'a Lexicon,
    pub bind: BindConfig,
}

pub fn run_scaling(base: &DataTable, config: &ScalingConfig, ctx: &ScalingContext<'_>) -> Result<Vec<GridCell>, ScalingError> {
    let grid = config.grid();
    let (max_rows, max_cols) = grid
        .iter()
        .fold(None, |acc: Option<(usize, usize)>, &(r, c)| {
            Some(acc.map_or((r, c), |(ar, ac)| (ar.max(r), ac.max(c))))
        })
        .ok_or_else(|| ScalingError::EmptyGrid(format!("rows {:?}, cols {:?}", config.rows, config.cols)))?;
    let grown = grow_table(base, max_rows, max_cols, config.seed)?;
    Ok(grid
        .par_iter()
        .map(|&(rows, cols)| {
            let table = sub_table(&grown, rows, cols);
            let seed = config.seed ^ ((rows as u64) << 32 | cols as u64);
            let probes = make_probes(&table, config.probes_per_cell, seed);
            let bind_ctx = BindContext {
                table: &table,
                provider: ctx.provider,
                db: ctx.db,
                lexicon: ctx.lexicon,
                config: ctx.bind.clone(),
            };
            let correct = probes
                .iter()
                .enumerate()
                .filter(|(i, p)| {
                    let n = Narrative {
                        id: format!("p{i}"),
                        order: *i,
                        text: p.text.clone(),
                        subject_hint: None,
                    };
                    bind(&n, &bind_ctx).is_ok_and(|o| probe_correct(p, &o.result))
                })
                .count();
            GridCell {
                rows,
                cols,
                probes: probes.len(),
                correct,
                accuracy: if probes.is_empty() { 0.0 } else { correct as f64 / probes.len() as f64 },
            }
        })
        .collect())
}

/// The grid as comma-separated `rows,cols,accuracy` lines under a header.
pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut out = String::from("rows,cols,accuracy\n");
    for c in cells {
        let _ = writeln!(out, "{},{},{:.4}", c.rows, c.cols, c.accuracy);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binder::NullProvider;
    use crate::corpus::power_table;

    #[test]
    fn growth_keeps_base_cells_and_labels_continue() {
        let base = power_table();
        let t = grow_table(&base, 8, 7, 1).unwrap();
        assert_eq!(t.row_count(), 8);
        assert_eq!(t.numeric_columns().count(), 7);
        assert_eq!(t.x_label(6), "2045");
        assert_eq!(t.numeric_series("Renewables").unwrap()[..5], base.numeric_series("Renewables").unwrap()[..]);
        assert!(crate::table::validate_table(&t).is_empty());
        for c in t.numeric_columns() {
            let vals: Vec<i64> = t.numeric_series(&c.name).unwrap().iter().flatten().map(|v| (v * 10.0).round() as i64).collect();
            let unique: BTreeSet<_> = vals.iter().collect();
            assert_eq!(unique.len(), vals.len(), "{}", c.name);
        }
    }

    #[test]
    fn sub_table_takes_prefixes() {
        let t = grow_table(&power_table(), 30, 9, 3).unwrap();
        let s = sub_table(&t, 20, 2);
        assert_eq!(s.row_count(), 20);
        assert_eq!(s.numeric_columns().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["Renewables", "LNG"]);
    }

    #[test]
    fn single_cell_grid_gives_one_line() {
        let cfg = ScalingConfig {
            cols: 3..=3,
            rows: 20..=20,
            ..ScalingConfig::default()
        };
        let ctx = ScalingContext {
            provider: &NullProvider,
            db: &PromptDb::bundled(),
            lexicon: &Lexicon::default(),
            bind: BindConfig::default(),
        };
        let cells = run_scaling(&power_table(), &cfg, &ctx).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(grid_csv(&cells).lines().count(), 2);
        assert_eq!(cells[0].accuracy, 1.0);
    }

    #[test]
    fn too_many_columns_is_an_error() {
        assert!(matches!(grow_table(&power_table(), 5, 40, 0), Err(ScalingError::TooManyColumns(40, _))));
    }
}
