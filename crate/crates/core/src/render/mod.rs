//! Base chart layout, overlay compositing, SVG / PNG / GIF output and
//! narrative-ordered chart sequences.

mod edit;
mod gif;
mod layout;
mod raster;
mod svg;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edit::{Axis, EditAction, EditError, EditOp, EditTarget, MoveParams};
pub use gif::{export_gif, gif_frame_count, GifError, DEFAULT_FRAME_MS};
pub use layout::{
    layout_base_chart, nice_ticks, BaseChartLayout, Element, ElementGeometry, LegendEntry, Point, Rect, Series, Size,
    Tick, MIN_CANVAS, SERIES_COLORS,
};
pub use raster::{png_dimensions, render_png, RasterError};
pub use svg::render_svg;

use crate::binder::{BindError, Narrative};
use crate::binding::BindingResult;
use crate::color::Rgb;
use crate::overlay::{apply_palette, compile_overlays, place_overlays, OverlaySpec, Palette, PlacedOverlay, PlacementError};
use crate::table::{ColumnKind, DataTable, DERIVED_SEPARATOR};
use crate::trend::Lexicon;

pub const FONT_SIZE: f64 = 12.0;
pub const FONT_SIZE_SMALL: f64 = 11.0;
pub const FONT_SIZE_TITLE: f64 = 14.0;
pub const LINE_HEIGHT: f64 = 14.0;
/// Glyph advance as a fraction of the font size; shared by layout and raster.
pub const CHAR_ADVANCE: f64 = 0.6;

/// Rendered width of `text` in the chart font.
pub fn text_width(text: &str, font_size: f64) -> f64 {
    text.chars().count() as f64 * font_size * CHAR_ADVANCE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartType {
    SingleLine,
    MultiLine,
    SingleBar,
    MultiBar,
}

impl ChartType {
    pub fn as_str(self) -> &'static str {
        match self {
            ChartType::SingleLine => "single_line",
            ChartType::MultiLine => "multi_line",
            ChartType::SingleBar => "single_bar",
            ChartType::MultiBar => "multi_bar",
        }
    }

    pub fn is_bar(self) -> bool {
        matches!(self, ChartType::SingleBar | ChartType::MultiBar)
    }
}

impl std::str::FromStr for ChartType {
    type Err = RenderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single_line" => Ok(ChartType::SingleLine),
            "multi_line" => Ok(ChartType::MultiLine),
            "single_bar" => Ok(ChartType::SingleBar),
            "multi_bar" => Ok(ChartType::MultiBar),
            other => Err(RenderError::UnknownChartType(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("no numeric column to plot")]
    NoNumericColumn,
    #[error("column \"{0}\" is not a numeric table column")]
    UnknownColumn(String),
    #[error("canvas {width}x{height} is smaller than 200x150")]
    CanvasTooSmall { width: f64, height: f64 },
    #[error("unknown chart type \"{0}\"")]
    UnknownChartType(String),
    #[error(transparent)]
    Placement(#[from] PlacementError),
}

/// Bars for categorical x or at most 8 rows, lines otherwise; single or
/// multi by column count. `requested` overrides the heuristic.
pub fn choose_chart_type(table: &DataTable, columns: &[String], requested: Option<ChartType>) -> Result<ChartType, RenderError> {
    let numeric = columns.iter().filter(|c| table.numeric_series(c).is_some()).count();
    if numeric == 0 {
        return Err(RenderError::NoNumericColumn);
    }
    if let Some(t) = requested {
        return Ok(t);
    }
    let categorical_x = table
        .x_column()
        .is_some_and(|i| table.columns[i].kind == ColumnKind::Categorical);
    let bar = categorical_x || table.row_count() <= 8;
    Ok(match (numeric > 1, bar) {
        (false, false) => ChartType::SingleLine,
        (true, false) => ChartType::MultiLine,
        (false, true) => ChartType::SingleBar,
        (true, true) => ChartType::MultiBar,
    })
}

/// Chart options shared by every chart of a sequence; loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ChartConfig {
    pub canvas: Size,
    pub chart_type: Option<ChartType>,
    /// Plotted columns; all numeric columns when absent.
    pub columns: Option<Vec<String>>,
    pub frame_duration_ms: u32,
}

impl Default for ChartConfig {
    fn default() -> Self {
        Self {
            canvas: Size::default(),
            chart_type: None,
            columns: None,
            frame_duration_ms: DEFAULT_FRAME_MS,
        }
    }
}

impl ChartConfig {
    pub fn load(path: &Path) -> Result<Self, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ElementColor {
    pub column: String,
    pub row: usize,
    pub color: Rgb,
}

/// One narrative's chart: the shared base chart description, its overlays and
/// the user edits applied so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LayeredChartSpec {
    pub narrative_id: String,
    pub order: usize,
    pub chart_type: ChartType,
    pub table: String,
    pub columns: Vec<String>,
    pub canvas: Size,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_axis_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_axis_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legend_position: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<Rgb>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_width: Option<f64>,
    #[serde(default)]
    pub series_colors: BTreeMap<String, Rgb>,
    #[serde(default)]
    pub element_colors: Vec<ElementColor>,
    pub overlays: Vec<OverlaySpec>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub user_edits: Vec<EditOp>,
}

/// A laid-out, placed and colored chart ready for output.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedChart {
    pub layout: BaseChartLayout,
    pub overlays: Vec<PlacedOverlay>,
}

impl LayeredChartSpec {
    /// Lays out the base chart, applies spec-level styling, places and
    /// colors the overlays.
    pub fn render(&self, table: &DataTable, palette: &Palette) -> Result<RenderedChart, RenderError> {
        let derived: Vec<String> = self.columns.iter().filter(|c| c.contains(DERIVED_SEPARATOR)).cloned().collect();
        let table = table.with_derived(&derived);
        let mut layout = layout_base_chart(&table, &self.columns, self.chart_type, self.canvas)?;
        layout.title = self.title.clone();
        if let Some(w) = self.line_width {
            layout.line_width = w;
        }
        if let Some(size) = self.title_size {
            layout.title_size = size;
        }
        if let Some(bg) = self.background {
            layout.background = bg;
        }
        if let Some(p) = self.legend_position {
            layout.move_legend(p);
        }
        layout.x_axis_label = self.x_axis_label.clone();
        layout.y_axis_label = self.y_axis_label.clone();
        layout.element_colors = self.element_colors.clone();
        for s in &mut layout.series {
            if let Some(c) = self.series_colors.get(&s.column) {
                s.base_color = *c;
                s.color = *c;
            }
        }
        let placed = place_overlays(&self.overlays, &layout, palette)?;
        let (layout, overlays) = apply_palette(&layout, &placed, palette);
        Ok(RenderedChart { layout, overlays })
    }

    pub fn render_svg(&self, table: &DataTable, palette: &Palette) -> Result<String, RenderError> {
        let chart = self.render(table, palette)?;
        Ok(render_svg(&chart.layout, &chart.overlays))
    }
}

/// Plotted columns for a sequence: the configured ones, else every numeric
/// column, plus any derived sum column a binding refers to.
pub fn plotted_columns<'a>(
    table: &DataTable,
    results: impl IntoIterator<Item = &'a BindingResult>,
    config: &ChartConfig,
) -> Vec<String> {
    let mut columns: Vec<String> = match &config.columns {
        Some(c) => c.clone(),
        None => table.numeric_columns().map(|c| c.name.clone()).collect(),
    };
    for r in results {
        for rec in &r.records {
            if table.derived_parts(&rec.data_name).is_some() && !columns.contains(&rec.data_name) {
                columns.push(rec.data_name.clone());
            }
        }
    }
    columns
}

/// One chart spec per narrative in narrative order, all on one base chart.
/// A narrative whose binding failed gets a plain base chart and a note.
pub fn sequence_charts(
    bindings: &[(Narrative, Result<BindingResult, BindError>)],
    table: &DataTable,
    config: &ChartConfig,
    lexicon: &Lexicon,
) -> Result<Vec<LayeredChartSpec>, RenderError> {
    let columns = plotted_columns(table, bindings.iter().filter_map(|(_, r)| r.as_ref().ok()), config);
    let chart_type = choose_chart_type(table, &columns, config.chart_type)?;
    let with_derived = table.with_derived(&columns);
    let mut specs: Vec<LayeredChartSpec> = bindings
        .iter()
        .map(|(narrative, result)| {
            let (overlays, notes) = match result {
                Ok(r) => (compile_overlays(r, &with_derived, lexicon), vec![]),
                Err(e) => (vec![], vec![format!("no overlays: {e}")]),
            };
            LayeredChartSpec {
                narrative_id: narrative.id.clone(),
                order: narrative.order,
                chart_type,
                table: table.name.clone(),
                columns: columns.clone(),
                canvas: config.canvas,
                title: table.name.clone(),
                title_size: None,
                x_axis_label: None,
                y_axis_label: None,
                legend_position: None,
                background: None,
                line_width: None,
                series_colors: BTreeMap::new(),
                element_colors: Vec::new(),
                overlays,
                notes,
                user_edits: Vec::new(),
            }
        })
        .collect();
    specs.sort_by_key(|s| s.order);
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binding::BindingRecord;

    fn yearly(rows: usize, cols: usize) -> DataTable {
        let mut csv = String::from("Year");
        for c in 0..cols {
            csv.push_str(&format!(",C{c}"));
        }
        csv.push('\n');
        for r in 0..rows {
            csv.push_str(&(2000 + r).to_string());
            for c in 0..cols {
                csv.push_str(&format!(",{}", r + c));
            }
            csv.push('\n');
        }
        DataTable::from_csv_str("t", &csv).unwrap()
    }

    fn names(t: &DataTable) -> Vec<String> {
        t.numeric_columns().map(|c| c.name.clone()).collect()
    }

    #[test]
    fn chart_type_rules() {
        let t = yearly(20, 1);
        assert_eq!(choose_chart_type(&t, &names(&t), None), Ok(ChartType::SingleLine));
        let t = yearly(7, 3);
        assert_eq!(choose_chart_type(&t, &names(&t), None), Ok(ChartType::MultiBar));
        let t = yearly(20, 1);
        assert_eq!(
            choose_chart_type(&t, &names(&t), Some(ChartType::SingleBar)),
            Ok(ChartType::SingleBar)
        );
        assert_eq!(choose_chart_type(&t, &[], None), Err(RenderError::NoNumericColumn));
    }

    fn narrative(order: usize) -> Narrative {
        Narrative {
            id: format!("n{order}"),
            order,
            text: "x".into(),
            subject_hint: None,
        }
    }

    #[test]
    fn failed_binding_gives_plain_chart_with_note() {
        let t = yearly(5, 2);
        let ok = BindingResult {
            records: vec![BindingRecord::numeric("c0", "C0", 2, 1.0, "1")],
            reason: "r".into(),
        };
        let bindings = vec![
            (narrative(1), Err(BindError::BindingFailed("no subject".into()))),
            (narrative(0), Ok(ok)),
        ];
        let specs = sequence_charts(&bindings, &t, &ChartConfig::default(), &Lexicon::default()).unwrap();
        assert_eq!(specs.iter().map(|s| s.order).collect::<Vec<_>>(), [0, 1]);
        assert_eq!(specs[0].overlays.len(), 3);
        assert!(specs[1].overlays.is_empty());
        assert_eq!(specs[1].notes.len(), 1);
        assert_eq!(specs[0].columns, specs[1].columns);
    }

    #[test]
    fn derived_column_is_plotted() {
        let t = yearly(3, 2);
        let r = BindingResult {
            records: vec![BindingRecord::numeric("mix", "C0 + C1", 2, 3.0, "3")],
            reason: "r".into(),
        };
        let specs = sequence_charts(&[(narrative(0), Ok(r))], &t, &ChartConfig::default(), &Lexicon::default()).unwrap();
        assert_eq!(specs[0].columns, ["C0", "C1", "C0 + C1"]);
        let chart = specs[0].render(&t, &Palette::default()).unwrap();
        assert_eq!(chart.layout.element("C0 + C1", 2).unwrap().value, 3.0);
    }
}
