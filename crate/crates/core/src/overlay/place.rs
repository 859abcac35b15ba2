//! Overlay geometry on a base chart layout.
//!
//! Markers sit on the element anchor. Labels and descriptions start at the
//! top edge of the plot, centered on the x of what they describe. An overall
//! indicator is a horizontal line with its label centered above it. Text boxes
//! are placed in spec order (user-positioned ones first) and moved down in
//! `nudge_step` increments until they overlap no earlier box; when the bottom
//! is reached the search wraps to the top and then shifts sideways.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{OverlayKind, OverlaySpec, Palette, Statistic, StatisticKind};
use crate::color::Rgb;
use crate::render::{text_width, BaseChartLayout, Point, Rect, FONT_SIZE, LINE_HEIGHT};
use crate::table::format_number;

const TEXT_PAD: f64 = 4.0;
const MAX_TEXT_WIDTH: f64 = 240.0;
const ARROWHEAD: f64 = 6.0;
const BOX_PAD: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// Restyles the base elements of a column; draws nothing itself.
    Series { column: String },
    Circle { cx: f64, cy: f64, r: f64 },
    Rect { rect: Rect },
    Arrow { from: Point, to: Point, head: [Point; 3] },
    HLine { x1: f64, x2: f64, y: f64 },
    VLine { x: f64, y1: f64, y2: f64 },
    TextBox { rect: Rect, lines: Vec<String> },
}

impl Shape {
    pub fn text_rect(&self) -> Option<Rect> {
        match self {
            Shape::TextBox { rect, .. } => Some(*rect),
            _ => None,
        }
    }

    /// True when every coordinate of the shape lies inside `bounds`.
    pub fn inside(&self, bounds: &Rect) -> bool {
        match self {
            Shape::Series { .. } => true,
            Shape::Circle { cx, cy, r } => bounds.contains_rect(&Rect::new(cx - r, cy - r, 2.0 * r, 2.0 * r)),
            Shape::Rect { rect } | Shape::TextBox { rect, .. } => bounds.contains_rect(rect),
            Shape::Arrow { from, to, head } => {
                bounds.contains_point(*from) && bounds.contains_point(*to) && head.iter().all(|p| bounds.contains_point(*p))
            }
            Shape::HLine { x1, x2, y } => {
                bounds.contains_point(Point { x: *x1, y: *y }) && bounds.contains_point(Point { x: *x2, y: *y })
            }
            Shape::VLine { x, y1, y2 } => {
                bounds.contains_point(Point { x: *x, y: *y1 }) && bounds.contains_point(Point { x: *x, y: *y2 })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Style {
    pub stroke_color: Rgb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill_color: Option<Rgb>,
    pub stroke_width: f64,
    pub opacity: f64,
    pub dashed: bool,
}

impl Default for Style {
    fn default() -> Self {
        Self {
            stroke_color: Rgb::BLACK,
            fill_color: None,
            stroke_width: 1.5,
            opacity: 1.0,
            dashed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedOverlay {
    pub spec: OverlaySpec,
    pub shapes: Vec<Shape>,
    pub style: Style,
    /// The text box found no free position and is omitted.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unplaced: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlacementError {
    #[error("overlay {id} targets {target}, which is not in the base chart")]
    TargetNotInLayout { id: String, target: String },
}

/// Size of the text box for `text`: one line for labels, wrapped at
/// 240 px for descriptions.
pub fn text_box_size(text: &str, wrap: bool, canvas_width: f64) -> (f64, f64, Vec<String>) {
    let max_w = MAX_TEXT_WIDTH.min(canvas_width - 2.0 * TEXT_PAD);
    let lines = if wrap { wrap_text(text, max_w - 2.0 * TEXT_PAD) } else { vec![text.to_string()] };
    let w = lines
        .iter()
        .map(|l| text_width(l, FONT_SIZE))
        .fold(0.0, f64::max)
        .min(canvas_width - 2.0 * TEXT_PAD)
        + 2.0 * TEXT_PAD;
    let h = lines.len() as f64 * LINE_HEIGHT + 2.0 * TEXT_PAD;
    (w, h, lines)
}

fn wrap_text(text: &str, max_w: f64) -> Vec<String> {
    let mut lines: Vec<String> = Vec::new();
    let mut current = String::new();
    for word in text.split_whitespace() {
        let candidate = if current.is_empty() { word.to_string() } else { format!("{current} {word}") };
        if !current.is_empty() && text_width(&candidate, FONT_SIZE) > max_w {
            lines.push(std::mem::take(&mut current));
            current = word.to_string();
        } else {
            current = candidate;
        }
    }
    if !current.is_empty() || lines.is_empty() {
        lines.push(current);
    }
    lines
}

fn not_in_layout(spec: &OverlaySpec, what: String) -> PlacementError {
    PlacementError::TargetNotInLayout {
        id: spec.id.clone(),
        target: what,
    }
}

/// Anchors of the target cells that have an element, in row order.
fn anchors(spec: &OverlaySpec, layout: &BaseChartLayout) -> Result<Vec<(usize, Point)>, PlacementError> {
    let t = &spec.target;
    for c in &t.columns {
        if !layout.has_column(c) {
            return Err(not_in_layout(spec, format!("column \"{c}\"")));
        }
    }
    if t.start_row == 0 || t.end_row > layout.row_count || t.start_row > t.end_row {
        return Err(not_in_layout(spec, format!("rows {}-{}", t.start_row, t.end_row)));
    }
    let mut out = Vec::new();
    for row in t.start_row..=t.end_row {
        for c in &t.columns {
            if let Some(e) = layout.element(c, row) {
                out.push((row, e.anchor()));
            }
        }
    }
    Ok(out)
}

fn clamp_rect(r: Rect, bounds: &Rect) -> Rect {
    let w = r.w.min(bounds.w);
    let h = r.h.min(bounds.h);
    Rect::new(
        r.x.clamp(bounds.x, bounds.right() - w),
        r.y.clamp(bounds.y, bounds.bottom() - h),
        w,
        h,
    )
}

/// Finds the first collision-free position for `start`, searching downward,
/// then from the top, then with sideways offsets. `None` when the canvas
/// has no free position.
fn settle(start: Rect, placed: &[Rect], canvas: &Rect, step: f64) -> Option<Rect> {
    let start = clamp_rect(start, canvas);
    let free = |r: &Rect| !placed.iter().any(|p| p.intersects(r));
    if free(&start) {
        return Some(start);
    }
    let step = step.max(1.0);
    let max_y = canvas.bottom() - start.h;
    let mut ys: Vec<f64> = Vec::new();
    let mut y = start.y;
    while y <= max_y + 1e-9 {
        ys.push(y);
        y += step;
    }
    if ys.last().is_some_and(|l| *l < max_y - 1e-9) {
        ys.push(max_y);
    }
    let mut y = canvas.y;
    while y < start.y {
        ys.push(y);
        y += step;
    }
    let max_x = canvas.right() - start.w;
    let max_k = ((canvas.w / step).ceil() as i64).max(1);
    for k in 0..=max_k {
        for sign in [1.0, -1.0] {
            if k == 0 && sign < 0.0 {
                continue;
            }
            let x = start.x + sign * k as f64 * step;
            if x < canvas.x - 1e-9 || x > max_x + 1e-9 {
                continue;
            }
            for &y in &ys {
                let r = Rect::new(x, y, start.w, start.h);
                if free(&r) {
                    return Some(r);
                }
            }
        }
    }
    None
}

fn arrowhead(from: Point, to: Point) -> [Point; 3] {
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    let len = (dx * dx + dy * dy).sqrt();
    let (ux, uy) = if len > 0.0 { (dx / len, dy / len) } else { (1.0, 0.0) };
    let base = Point {
        x: to.x - ux * ARROWHEAD,
        y: to.y - uy * ARROWHEAD,
    };
    let half = ARROWHEAD / 2.0;
    [
        to,
        Point {
            x: base.x - uy * half,
            y: base.y + ux * half,
        },
        Point {
            x: base.x + uy * half,
            y: base.y - ux * half,
        },
    ]
}

fn clamp_point(p: Point, r: &Rect) -> Point {
    Point {
        x: p.x.clamp(r.x, r.right()),
        y: p.y.clamp(r.y, r.bottom()),
    }
}

fn resolve_statistic(spec: &OverlaySpec, layout: &BaseChartLayout) -> Option<Statistic> {
    if spec.statistic.is_some() {
        return spec.statistic;
    }
    let values: Vec<f64> = layout
        .elements
        .iter()
        .filter(|e| spec.target.columns.contains(&e.column))
        .filter(|e| e.row >= spec.target.start_row && e.row <= spec.target.end_row)
        .map(|e| e.value)
        .collect();
    if values.is_empty() {
        return None;
    }
    Some(Statistic {
        kind: StatisticKind::Mean,
        value: values.iter().sum::<f64>() / values.len() as f64,
    })
}

/// Resolves geometry for every spec. Every shape lies inside the canvas and
/// automatically placed text boxes overlap no other text box; a text box
/// with no free position is omitted and its overlay marked `unplaced`.
/// User-positioned boxes are kept as given, clamped to the canvas.
pub fn place_overlays(
    specs: &[OverlaySpec],
    layout: &BaseChartLayout,
    palette: &Palette,
) -> Result<Vec<PlacedOverlay>, PlacementError> {
    let canvas = layout.canvas_rect();
    let plot = layout.plot;
    let mut text_boxes: Vec<Rect> = Vec::new();
    let mut placed: Vec<Option<PlacedOverlay>> = vec![None; specs.len()];

    // User-positioned text first so automatic boxes avoid them.
    let mut order: Vec<usize> = (0..specs.len()).collect();
    order.sort_by_key(|&i| (specs[i].manual.position.is_none(), i));

    for i in order {
        let spec = &specs[i];
        let anchors = anchors(spec, layout)?;
        let mut shapes = Vec::new();
        let mut style = Style::default();
        let mut unplaced = false;
        match spec.kind {
            OverlayKind::Highlight => {
                for c in &spec.target.columns {
                    shapes.push(Shape::Series { column: c.clone() });
                }
            }
            OverlayKind::Marker => {
                let r = spec.manual.size.unwrap_or(palette.marker_radius);
                for (_, a) in &anchors {
                    let c = spec.manual.position.unwrap_or(*a);
                    let c = Point {
                        x: c.x.clamp(r, canvas.w - r),
                        y: c.y.clamp(r, canvas.h - r),
                    };
                    shapes.push(Shape::Circle { cx: c.x, cy: c.y, r });
                }
                style.fill_color = Some(Rgb::WHITE);
                style.stroke_width = 1.5;
            }
            OverlayKind::Label | OverlayKind::Description => {
                let text = spec.text_content.clone().unwrap_or_default();
                let (w, h, lines) = text_box_size(&text, spec.kind == OverlayKind::Description, canvas.w);
                let rect = match spec.manual.position {
                    Some(p) => Some(clamp_rect(Rect::new(p.x, p.y, w, h), &canvas)),
                    None => {
                        let x = match (anchors.first(), anchors.last()) {
                            (Some(a), Some(b)) => (a.1.x + b.1.x) / 2.0,
                            _ => layout
                                .x_of(spec.target.start_row)
                                .zip(layout.x_of(spec.target.end_row))
                                .map_or(plot.x + plot.w / 2.0, |(a, b)| (a + b) / 2.0),
                        };
                        settle(Rect::new(x - w / 2.0, plot.y + 2.0, w, h), &text_boxes, &canvas, palette.nudge_step)
                    }
                };
                match rect {
                    Some(rect) => {
                        text_boxes.push(rect);
                        shapes.push(Shape::TextBox { rect, lines });
                    }
                    None => unplaced = true,
                }
                style.stroke_width = 0.0;
            }
            OverlayKind::TrendLine => {
                if let (Some(first), Some(last)) = (anchors.first(), anchors.last()) {
                    if first.0 != last.0 {
                        let from = clamp_point(first.1, &canvas);
                        let to = clamp_point(last.1, &canvas);
                        let head = arrowhead(from, to).map(|p| clamp_point(p, &canvas));
                        shapes.push(Shape::Arrow { from, to, head });
                    }
                }
                style.stroke_width = 2.0;
            }
            OverlayKind::OverallIndicator => {
                if let Some(stat) = resolve_statistic(spec, layout) {
                    let y = layout.y_of(stat.value).clamp(canvas.y, canvas.bottom());
                    shapes.push(Shape::HLine {
                        x1: plot.x,
                        x2: plot.right(),
                        y,
                    });
                    let text = spec
                        .text_content
                        .clone()
                        .unwrap_or_else(|| format!("{} {}", stat.kind.as_str(), format_number(stat.value)));
                    let (w, h, lines) = text_box_size(&text, false, canvas.w);
                    let rect = match spec.manual.position {
                        Some(p) => Some(clamp_rect(Rect::new(p.x, p.y, w, h), &canvas)),
                        None => settle(
                            Rect::new(plot.x + plot.w / 2.0 - w / 2.0, y - 2.0 - h, w, h),
                            &text_boxes,
                            &canvas,
                            palette.nudge_step,
                        ),
                    };
                    match rect {
                        Some(rect) => {
                            text_boxes.push(rect);
                            shapes.push(Shape::TextBox { rect, lines });
                        }
                        None => unplaced = true,
                    }
                }
                style.dashed = true;
            }
            OverlayKind::SpecialTimePoint => {
                if let Some(x) = layout.x_of(spec.target.start_row) {
                    shapes.push(Shape::VLine {
                        x,
                        y1: plot.y,
                        y2: plot.bottom(),
                    });
                }
                style.dashed = true;
            }
            OverlayKind::BoundingBox => {
                if !anchors.is_empty() {
                    let rects: Vec<Rect> = spec
                        .target
                        .columns
                        .iter()
                        .flat_map(|c| (spec.target.start_row..=spec.target.end_row).map(move |r| (c, r)))
                        .filter_map(|(c, r)| layout.element(c, r))
                        .map(|e| match e.geometry {
                            crate::render::ElementGeometry::Bar(r) => r,
                            crate::render::ElementGeometry::Vertex(p) => Rect::new(p.x, p.y, 0.0, 0.0),
                        })
                        .collect();
                    let x1 = rects.iter().map(|r| r.x).fold(f64::INFINITY, f64::min) - BOX_PAD;
                    let y1 = rects.iter().map(|r| r.y).fold(f64::INFINITY, f64::min) - BOX_PAD;
                    let x2 = rects.iter().map(|r| r.right()).fold(f64::NEG_INFINITY, f64::max) + BOX_PAD;
                    let y2 = rects.iter().map(|r| r.bottom()).fold(f64::NEG_INFINITY, f64::max) + BOX_PAD;
                    let x1 = x1.max(canvas.x);
                    let y1 = y1.max(canvas.y);
                    shapes.push(Shape::Rect {
                        rect: Rect::new(x1, y1, x2.min(canvas.right()) - x1, y2.min(canvas.bottom()) - y1),
                    });
                }
            }
            OverlayKind::Background => {
                let half = layout.band_width / 2.0;
                if let (Some(a), Some(b)) = (layout.x_of(spec.target.start_row), layout.x_of(spec.target.end_row)) {
                    shapes.push(Shape::Rect {
                        rect: Rect::new(a - half, plot.y, b - a + 2.0 * half, plot.h),
                    });
                }
                style.stroke_width = 0.0;
                style.opacity = 0.15;
            }
        }
        placed[i] = Some(PlacedOverlay {
            spec: spec.clone(),
            shapes,
            style,
            unplaced,
        });
    }
    Ok(placed.into_iter().map(|p| p.expect("every spec placed")).collect())
}
