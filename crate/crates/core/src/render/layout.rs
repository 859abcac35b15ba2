//! Base chart geometry: scales, bar and line elements, axes, legend, title.

use serde::{Deserialize, Serialize};

use super::{ChartType, RenderError};
use crate::color::Rgb;
use crate::table::{format_number, DataTable};

pub const MIN_CANVAS: Size = Size {
    width: 200.0,
    height: 150.0,
};

/// Base series colors, assigned to plotted columns in order.
pub const SERIES_COLORS: [Rgb; 8] = [
    Rgb(0x4e, 0x79, 0xa7),
    Rgb(0xf2, 0x8e, 0x2b),
    Rgb(0x59, 0xa1, 0x4f),
    Rgb(0x76, 0xb7, 0xb2),
    Rgb(0xb0, 0x7a, 0xa1),
    Rgb(0xed, 0xc9, 0x48),
    Rgb(0x9c, 0x75, 0x5f),
    Rgb(0xba, 0xb0, 0xac),
];

const TITLE_HEIGHT: f64 = 32.0;
const LEGEND_HEIGHT: f64 = 20.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_BOTTOM: f64 = 36.0;
const BAND_GAP: f64 = 0.2;
const DOMAIN_PAD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Size {
    pub width: f64,
    pub height: f64,
}

impl Size {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }
}

impl Default for Size {
    fn default() -> Self {
        Size::new(800.0, 450.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// True when the interiors overlap; shared edges do not count.
    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.right() && other.x < self.right() && self.y < other.bottom() && other.y < self.bottom()
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x - 1e-9
            && other.y >= self.y - 1e-9
            && other.right() <= self.right() + 1e-9
            && other.bottom() <= self.bottom() + 1e-9
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.x - 1e-9 && p.x <= self.right() + 1e-9 && p.y >= self.y - 1e-9 && p.y <= self.bottom() + 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ElementGeometry {
    Bar(Rect),
    Vertex(Point),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub column: String,
    /// 1-based row.
    pub row: usize,
    pub value: f64,
    pub geometry: ElementGeometry,
}

impl Element {
    /// The point overlays attach to: the value end of a bar, or the vertex.
    pub fn anchor(&self) -> Point {
        match self.geometry {
            ElementGeometry::Vertex(p) => p,
            ElementGeometry::Bar(r) => Point {
                x: r.x + r.w / 2.0,
                y: if self.value >= 0.0 { r.y } else { r.bottom() },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    pub position: f64,
    pub label: String,
}

/// A plotted column with its base color and the color currently drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub column: String,
    pub base_color: Rgb,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub column: String,
    pub swatch: Rect,
    pub label_at: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseChartLayout {
    pub chart_type: ChartType,
    pub canvas: Size,
    pub plot: Rect,
    pub title: String,
    pub title_at: Point,
    pub series: Vec<Series>,
    pub row_count: usize,
    /// Center x of each row's band, index 0 for row 1.
    pub x_centers: Vec<f64>,
    pub band_width: f64,
    /// Padded value domain (low, high).
    pub y_domain: (f64, f64),
    pub elements: Vec<Element>,
    pub x_ticks: Vec<Tick>,
    pub y_ticks: Vec<Tick>,
    pub legend: Vec<LegendEntry>,
    pub line_width: f64,
    pub background: Rgb,
    pub title_size: f64,
    pub x_axis_label: Option<String>,
    pub y_axis_label: Option<String>,
    /// Per-element colors that replace the series color.
    pub element_colors: Vec<super::ElementColor>,
}

impl BaseChartLayout {
    pub fn canvas_rect(&self) -> Rect {
        Rect::new(0.0, 0.0, self.canvas.width, self.canvas.height)
    }

    /// Linear value-to-pixel map; larger values are higher on the canvas.
    pub fn y_of(&self, value: f64) -> f64 {
        let (lo, hi) = self.y_domain;
        self.plot.y + self.plot.h * (hi - value) / (hi - lo)
    }

    pub fn x_of(&self, row: usize) -> Option<f64> {
        self.x_centers.get(row.checked_sub(1)?).copied()
    }

    pub fn element(&self, column: &str, row: usize) -> Option<&Element> {
        self.elements.iter().find(|e| e.column == column && e.row == row)
    }

    pub fn has_column(&self, column: &str) -> bool {
        self.series.iter().any(|s| s.column == column)
    }

    pub fn series_color(&self, column: &str) -> Option<Rgb> {
        self.series.iter().find(|s| s.column == column).map(|s| s.color)
    }

    /// Drawn color of one element: its own override, else its series color.
    pub fn element_color(&self, column: &str, row: usize) -> Rgb {
        self.element_colors
            .iter()
            .find(|e| e.column == column && e.row == row)
            .map(|e| e.color)
            .or_else(|| self.series_color(column))
            .unwrap_or(Rgb::BLACK)
    }

    /// Shifts the legend so its first swatch starts at `origin`.
    pub fn move_legend(&mut self, origin: Point) {
        let Some(first) = self.legend.first() else { return };
        let (dx, dy) = (origin.x - first.swatch.x, origin.y - first.swatch.y);
        for e in &mut self.legend {
            e.swatch.x += dx;
            e.swatch.y += dy;
            e.label_at.x += dx;
            e.label_at.y += dy;
        }
    }
}

/// Lays out `columns` of `table` as `chart_type` on a canvas. Derived sum
/// columns must already be materialized in `table`.
pub fn layout_base_chart(
    table: &DataTable,
    columns: &[String],
    chart_type: ChartType,
    canvas: Size,
) -> Result<BaseChartLayout, RenderError> {
    if canvas.width < MIN_CANVAS.width || canvas.height < MIN_CANVAS.height {
        return Err(RenderError::CanvasTooSmall {
            width: canvas.width,
            height: canvas.height,
        });
    }
    if columns.is_empty() {
        return Err(RenderError::NoNumericColumn);
    }
    let mut series_values = Vec::with_capacity(columns.len());
    for c in columns {
        let values = table
            .numeric_series(c)
            .ok_or_else(|| RenderError::UnknownColumn(c.clone()))?;
        series_values.push(values);
    }
    let rows = table.row_count();
    let legend_h = if columns.len() > 1 { LEGEND_HEIGHT } else { 0.0 };
    let plot = Rect::new(
        MARGIN_LEFT,
        TITLE_HEIGHT + legend_h,
        canvas.width - MARGIN_LEFT - MARGIN_RIGHT,
        canvas.height - TITLE_HEIGHT - legend_h - MARGIN_BOTTOM,
    );

    let values = series_values.iter().flatten().flatten().copied();
    let (dmin, dmax) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if dmin.is_finite() { (dmin.min(0.0), dmax) } else { (0.0, 1.0) };
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let y_domain = (lo - DOMAIN_PAD * span, hi + DOMAIN_PAD * span);

    let band_width = plot.w / rows.max(1) as f64;
    let x_centers: Vec<f64> = (0..rows).map(|i| plot.x + band_width * (i as f64 + 0.5)).collect();

    let series: Vec<Series> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let color = SERIES_COLORS[i % SERIES_COLORS.len()];
            Series {
                column: c.clone(),
                base_color: color,
                color,
            }
        })
        .collect();

    let mut layout = BaseChartLayout {
        chart_type,
        canvas,
        plot,
        title: table.name.clone(),
        title_at: Point {
            x: canvas.width / 2.0,
            y: TITLE_HEIGHT / 2.0 + 5.0,
        },
        series,
        row_count: rows,
        x_centers,
        band_width,
        y_domain,
        elements: Vec::new(),
        x_ticks: Vec::new(),
        y_ticks: Vec::new(),
        legend: Vec::new(),
        line_width: 2.0,
        background: Rgb::WHITE,
        title_size: super::FONT_SIZE_TITLE,
        x_axis_label: None,
        y_axis_label: None,
        element_colors: Vec::new(),
    };

    let baseline = layout.y_of(0.0_f64.clamp(y_domain.0, y_domain.1));
    let bars = matches!(chart_type, ChartType::SingleBar | ChartType::MultiBar);
    let inner = band_width * (1.0 - BAND_GAP);
    let sub = inner / columns.len() as f64;
    for (ci, (column, values)) in columns.iter().zip(&series_values).enumerate() {
        for (ri, v) in values.iter().enumerate() {
            let Some(v) = *v else { continue };
            let y = layout.y_of(v);
            let geometry = if bars {
                let x = layout.x_centers[ri] - inner / 2.0 + sub * ci as f64;
                ElementGeometry::Bar(Rect::new(x, y.min(baseline), sub, (y - baseline).abs()))
            } else {
                ElementGeometry::Vertex(Point {
                    x: layout.x_centers[ri],
                    y,
                })
            };
            layout.elements.push(Element {
                column: column.clone(),
                row: ri + 1,
                value: v,
                geometry,
            });
        }
    }

    // At most one x label per 48 px.
    let stride = ((48.0 / band_width).ceil() as usize).max(1);
    layout.x_ticks = (1..=rows)
        .step_by(stride)
        .map(|r| Tick {
            position: layout.x_centers[r - 1],
            label: table.x_label(r),
        })
        .collect();
    layout.y_ticks = nice_ticks(y_domain.0, y_domain.1, 5)
        .into_iter()
        .map(|v| Tick {
            position: layout.y_of(v),
            label: format_number(v),
        })
        .collect();

    if columns.len() > 1 {
        let mut x = plot.x;
        let y = TITLE_HEIGHT;
        for c in columns {
            let text_w = super::text_width(c, super::FONT_SIZE_SMALL);
            layout.legend.push(LegendEntry {
                column: c.clone(),
                swatch: Rect::new(x, y + 4.0, 10.0, 10.0),
                label_at: Point { x: x + 14.0, y: y + 13.0 },
            });
            x += 14.0 + text_w + 16.0;
        }
    }
    Ok(layout)
}

/// Round tick values (steps of 1, 2 or 5 times a power of ten) inside [lo, hi].
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) || target == 0 {
        return vec![lo];
    }
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last)
        .map(|i| {
            let v = i as f64 * step;
            // Strip float noise such as 0.30000000000000004.
            (v / step).round() * step
        })
        .map(|v| if v.abs() < step * 1e-9 { 0.0 } else { (v * 1e9).round() / 1e9 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Cell, ColumnKind, ColumnMeta};

    fn table(cols: &[(&str, &[Option<f64>])]) -> DataTable {
        let n = cols[0].1.len();
        let mut columns = vec![ColumnMeta::new("Year", ColumnKind::Temporal)];
        columns.extend(cols.iter().map(|(c, _)| ColumnMeta::new(*c, ColumnKind::Numeric)));
        let rows = (0..n)
            .map(|r| {
                std::iter::once(Cell::Text((2000 + r).to_string()))
                    .chain(cols.iter().map(|(_, v)| v[r].map_or(Cell::Null, Cell::Number)))
                    .collect()
            })
            .collect();
        DataTable::new("t", columns, rows)
    }

    #[test]
    fn midpoint_of_padded_domain() {
        let vals: Vec<Option<f64>> = (0..=10).map(|v| Some(v as f64)).collect();
        let t = table(&[("A", &vals)]);
        let l = layout_base_chart(&t, &["A".into()], ChartType::SingleLine, Size::new(800.0, 450.0)).unwrap();
        assert_eq!(l.y_domain, (-0.5, 10.5));
        assert!((l.y_of(5.0) - (l.plot.y + l.plot.h / 2.0)).abs() < 1e-9);
        assert!(l.y_of(1.0) > l.y_of(2.0));
    }

    #[test]
    fn zero_bar_has_zero_height_at_baseline() {
        let t = table(&[("A", &[Some(0.0), Some(4.0)])]);
        let l = layout_base_chart(&t, &["A".into()], ChartType::SingleBar, Size::default()).unwrap();
        let ElementGeometry::Bar(r) = l.element("A", 1).unwrap().geometry else { panic!() };
        assert_eq!(r.h, 0.0);
        assert!((r.y - l.y_of(0.0)).abs() < 1e-9);
    }

    #[test]
    fn multi_bar_splits_band_equally() {
        let t = table(&[("A", &[Some(1.0), Some(2.0)]), ("B", &[Some(3.0), Some(1.0)])]);
        let l = layout_base_chart(&t, &["A".into(), "B".into()], ChartType::MultiBar, Size::default()).unwrap();
        let ElementGeometry::Bar(a) = l.element("A", 1).unwrap().geometry else { panic!() };
        let ElementGeometry::Bar(b) = l.element("B", 1).unwrap().geometry else { panic!() };
        assert!((a.w - b.w).abs() < 1e-9);
        assert!((a.w * 2.0 - l.band_width * 0.8).abs() < 1e-9);
        assert!((a.right() - b.x).abs() < 1e-9);
    }

    #[test]
    fn element_count_skips_nulls() {
        let t = table(&[("A", &[Some(1.0), None, Some(2.0)]), ("B", &[None, Some(3.0), Some(1.0)])]);
        let l = layout_base_chart(&t, &["A".into(), "B".into()], ChartType::MultiLine, Size::default()).unwrap();
        assert_eq!(l.elements.len(), 4);
    }

    #[test]
    fn small_canvas_is_rejected() {
        let t = table(&[("A", &[Some(1.0)])]);
        let e = layout_base_chart(&t, &["A".into()], ChartType::SingleBar, Size::new(199.0, 150.0));
        assert!(matches!(e, Err(RenderError::CanvasTooSmall { .. })));
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(-0.5, 10.5, 5), vec![0.0, 5.0, 10.0]);
        assert_eq!(nice_ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(nice_ticks(0.0, 1.0, 5), vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
    }
}
