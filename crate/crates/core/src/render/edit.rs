//! User edits on a [`LayeredChartSpec`]. Every successful edit returns its
//! inverse, so applying the inverse restores the spec exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ElementColor, LayeredChartSpec, Point, RenderError, Size};
use crate::color::Rgb;
use crate::overlay::{OverlayKind, OverlaySpec, Palette, Shape};
use crate::table::DataTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EditTarget {
    Overlay { id: String },
    Element { column: String, row: usize },
    Series { column: String },
    Canvas,
    Title,
    Axis { axis: Axis },
    Legend,
}

/// Absolute `x`/`y` win over relative `dx`/`dy`; all fields absent resets
/// the position to the computed one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dy: Option<f64>,
}

impl MoveParams {
    pub fn to(p: Option<Point>) -> Self {
        Self {
            x: p.map(|p| p.x),
            y: p.map(|p| p.y),
            ..Self::default()
        }
    }

    fn is_reset(&self) -> bool {
        *self == Self::default()
    }
}

/// `None` values clear a previous override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", content = "params", rename_all = "snake_case")]
pub enum EditAction {
    Move(MoveParams),
    Recolor {
        #[serde(default)]
        color: Option<Rgb>,
    },
    Resize {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        width: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        height: Option<f64>,
    },
    SetText {
        #[serde(default)]
        text: Option<String>,
    },
    AddOverlay {
        spec: Box<OverlaySpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
    },
    RemoveOverlay,
}

impl EditAction {
    fn name(&self) -> &'static str {
        match self {
            EditAction::Move(_) => "move",
            EditAction::Recolor { .. } => "recolor",
            EditAction::Resize { .. } => "resize",
            EditAction::SetText { .. } => "set_text",
            EditAction::AddOverlay { .. } => "add_overlay",
            EditAction::RemoveOverlay => "remove_overlay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditOp {
    pub target: EditTarget,
    #[serde(flatten)]
    pub action: EditAction,
}

impl EditOp {
    pub fn new(target: EditTarget, action: EditAction) -> Self {
        Self { target, action }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditError {
    #[error("unknown edit target: {0}")]
    UnknownTarget(String),
    #[error("{action} does not apply to {target}")]
    Unsupported { action: &'static str, target: String },
    #[error("invalid edit: {0}")]
    Invalid(String),
    #[error("edit leaves the chart unrenderable: {0}")]
    Render(#[from] RenderError),
}

fn describe(t: &EditTarget) -> String {
    match t {
        EditTarget::Overlay { id } => format!("overlay {id}"),
        EditTarget::Element { column, row } => format!("element {column}[{row}]"),
        EditTarget::Series { column } => format!("series {column}"),
        EditTarget::Canvas => "canvas".into(),
        EditTarget::Title => "title".into(),
        EditTarget::Axis { axis: Axis::X } => "x axis".into(),
        EditTarget::Axis { axis: Axis::Y } => "y axis".into(),
        EditTarget::Legend => "legend".into(),
    }
}

fn positive(v: Option<f64>, what: &str) -> Result<(), EditError> {
    match v {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(EditError::Invalid(format!("{what} must be positive"))),
        _ => Ok(()),
    }
}

impl LayeredChartSpec {
    /// Applies `op` and returns its inverse. The spec is left unchanged on
    /// error, including when the edited chart would fail to render.
    pub fn apply_edit(&mut self, op: &EditOp, table: &DataTable, palette: &Palette) -> Result<EditOp, EditError> {
        let mut next = self.clone();
        let inverse = next.edit_in_place(op, table, palette)?;
        next.render(table, palette)?;
        *self = next;
        Ok(inverse)
    }

    /// [`apply_edit`](Self::apply_edit) and appends `op` to `user_edits`.
    pub fn apply_logged_edit(&mut self, op: &EditOp, table: &DataTable, palette: &Palette) -> Result<EditOp, EditError> {
        let inverse = self.apply_edit(op, table, palette)?;
        self.user_edits.push(op.clone());
        Ok(inverse)
    }

    fn overlay_index(&self, id: &str) -> Result<usize, EditError> {
        self.overlays
            .iter()
            .position(|o| o.id == id)
            .ok_or_else(|| EditError::UnknownTarget(format!("overlay {id}")))
    }

    fn next_overlay_id(&self) -> String {
        (self.overlays.len()..)
            .map(|n| format!("o{n}"))
            .find(|id| self.overlays.iter().all(|o| &o.id != id))
            .expect("unbounded range")
    }

    fn edit_in_place(&mut self, op: &EditOp, table: &DataTable, palette: &Palette) -> Result<EditOp, EditError> {
        let unsupported = || EditError::Unsupported {
            action: op.action.name(),
            target: describe(&op.target),
        };
        let inverse = |action| Ok(EditOp::new(op.target.clone(), action));
        match (&op.target, &op.action) {
            (EditTarget::Overlay { id }, EditAction::Move(m)) => {
                let i = self.overlay_index(id)?;
                let kind = self.overlays[i].kind;
                if !(kind.is_text() || kind == OverlayKind::Marker) {
                    return Err(unsupported());
                }
                let old = self.overlays[i].manual.position;
                let new = if m.is_reset() {
                    None
                } else {
                    let current = match old {
                        Some(p) => p,
                        None => self.placed_position(i, table, palette)?,
                    };
                    Some(Point {
                        x: m.x.unwrap_or(current.x + m.dx.unwrap_or(0.0)),
                        y: m.y.unwrap_or(current.y + m.dy.unwrap_or(0.0)),
                    })
                };
                self.overlays[i].manual.position = new;
                inverse(EditAction::Move(MoveParams::to(old)))
            }
            (EditTarget::Legend, EditAction::Move(m)) => {
                let old = self.legend_position;
                let new = if m.is_reset() {
                    None
                } else {
                    let current = match old {
                        Some(p) => p,
                        None => {
                            let chart = self.render(table, palette)?;
                            let first = chart.layout.legend.first().ok_or_else(unsupported)?;
                            Point {
                                x: first.swatch.x,
                                y: first.swatch.y,
                            }
                        }
                    };
                    Some(Point {
                        x: m.x.unwrap_or(current.x + m.dx.unwrap_or(0.0)),
                        y: m.y.unwrap_or(current.y + m.dy.unwrap_or(0.0)),
                    })
                };
                self.legend_position = new;
                inverse(EditAction::Move(MoveParams::to(old)))
            }
            (EditTarget::Overlay { id }, EditAction::Recolor { color }) => {
                let i = self.overlay_index(id)?;
                let old = std::mem::replace(&mut self.overlays[i].manual.stroke_color, *color);
                inverse(EditAction::Recolor { color: old })
            }
            (EditTarget::Element { column, row }, EditAction::Recolor { color }) => {
                let chart = self.render(table, palette)?;
                if chart.layout.element(column, *row).is_none() {
                    return Err(EditError::UnknownTarget(describe(&op.target)));
                }
                let pos = self.element_colors.iter().position(|e| &e.column == column && e.row == *row);
                let old = pos.map(|p| self.element_colors[p].color);
                match (pos, color) {
                    (Some(p), Some(c)) => self.element_colors[p].color = *c,
                    (Some(p), None) => {
                        self.element_colors.remove(p);
                    }
                    (None, Some(c)) => self.element_colors.push(ElementColor {
                        column: column.clone(),
                        row: *row,
                        color: *c,
                    }),
                    (None, None) => {}
                }
                inverse(EditAction::Recolor { color: old })
            }
            (EditTarget::Series { column }, EditAction::Recolor { color }) => {
                if !self.columns.contains(column) {
                    return Err(EditError::UnknownTarget(describe(&op.target)));
                }
                let old = match color {
                    Some(c) => self.series_colors.insert(column.clone(), *c),
                    None => self.series_colors.remove(column),
                };
                inverse(EditAction::Recolor { color: old })
            }
            (EditTarget::Canvas, EditAction::Recolor { color }) => {
                let old = std::mem::replace(&mut self.background, *color);
                inverse(EditAction::Recolor { color: old })
            }
            (EditTarget::Overlay { id }, EditAction::Resize { value, .. }) => {
                positive(*value, "size")?;
                let i = self.overlay_index(id)?;
                let is_marker = self.overlays[i].kind == OverlayKind::Marker;
                let manual = &mut self.overlays[i].manual;
                let slot = if is_marker {
                    &mut manual.size
                } else {
                    &mut manual.stroke_width
                };
                let old = std::mem::replace(slot, *value);
                inverse(EditAction::Resize {
                    value: old,
                    width: None,
                    height: None,
                })
            }
            (EditTarget::Series { column }, EditAction::Resize { value, .. }) => {
                if !self.columns.contains(column) {
                    return Err(EditError::UnknownTarget(describe(&op.target)));
                }
                positive(*value, "line width")?;
                let old = std::mem::replace(&mut self.line_width, *value);
                inverse(EditAction::Resize {
                    value: old,
                    width: None,
                    height: None,
                })
            }
            (EditTarget::Title, EditAction::Resize { value, .. }) => {
                positive(*value, "title size")?;
                let old = std::mem::replace(&mut self.title_size, *value);
                inverse(EditAction::Resize {
                    value: old,
                    width: None,
                    height: None,
                })
            }
            (EditTarget::Canvas, EditAction::Resize { width, height, .. }) => {
                let old = self.canvas;
                self.canvas = Size::new(width.unwrap_or(old.width), height.unwrap_or(old.height));
                inverse(EditAction::Resize {
                    value: None,
                    width: Some(old.width),
                    height: Some(old.height),
                })
            }
            (EditTarget::Overlay { id }, EditAction::SetText { text }) => {
                let i = self.overlay_index(id)?;
                if !self.overlays[i].kind.is_text() {
                    return Err(unsupported());
                }
                let old = std::mem::replace(&mut self.overlays[i].text_content, text.clone());
                inverse(EditAction::SetText { text: old })
            }
            (EditTarget::Title, EditAction::SetText { text }) => {
                let new = text.clone().unwrap_or_else(|| self.table.clone());
                let old = std::mem::replace(&mut self.title, new);
                inverse(EditAction::SetText { text: Some(old) })
            }
            (EditTarget::Axis { axis }, EditAction::SetText { text }) => {
                let slot = match axis {
                    Axis::X => &mut self.x_axis_label,
                    Axis::Y => &mut self.y_axis_label,
                };
                let old = std::mem::replace(slot, text.clone());
                inverse(EditAction::SetText { text: old })
            }
            (EditTarget::Canvas, EditAction::AddOverlay { spec, index }) => {
                let mut spec = (**spec).clone();
                if spec.id.is_empty() {
                    spec.id = self.next_overlay_id();
                } else if self.overlays.iter().any(|o| o.id == spec.id) {
                    return Err(EditError::Invalid(format!("overlay id {} already exists", spec.id)));
                }
                let at = index.unwrap_or(self.overlays.len());
                if at > self.overlays.len() {
                    return Err(EditError::Invalid(format!("overlay index {at} out of range")));
                }
                let id = spec.id.clone();
                self.overlays.insert(at, spec);
                Ok(EditOp::new(EditTarget::Overlay { id }, EditAction::RemoveOverlay))
            }
            (EditTarget::Overlay { id }, EditAction::RemoveOverlay) => {
                let i = self.overlay_index(id)?;
                let spec = self.overlays.remove(i);
                Ok(EditOp::new(
                    EditTarget::Canvas,
                    EditAction::AddOverlay {
                        spec: Box::new(spec),
                        index: Some(i),
                    },
                ))
            }
            _ => Err(unsupported()),
        }
    }

    /// Computed position of a movable overlay: a text box's top-left corner
    /// or a marker's center.
    fn placed_position(&self, index: usize, table: &DataTable, palette: &Palette) -> Result<Point, EditError> {
        let chart = self.render(table, palette)?;
        let id = &self.overlays[index].id;
        chart
            .overlays
            .iter()
            .find(|p| &p.spec.id == id)
            .and_then(|p| {
                p.shapes.iter().find_map(|s| match s {
                    Shape::TextBox { rect, .. } => Some(Point { x: rect.x, y: rect.y }),
                    Shape::Circle { cx, cy, .. } => Some(Point { x: *cx, y: *cy }),
                    _ => None,
                })
            })
            .ok_or_else(|| EditError::Invalid(format!("overlay {id} has no position")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlay::OverlayTarget;
    use crate::render::{ChartType, LayeredChartSpec};

    fn table() -> DataTable {
        DataTable::from_csv_str("t", "Year,A,B\n2001,1,4\n2002,3,2\n2003,5,1\n").unwrap()
    }

    fn spec() -> LayeredChartSpec {
        let mut label = OverlaySpec::new(OverlayKind::Label, OverlayTarget::cell("A", 2));
        label.id = "o0".into();
        label.text_content = Some("3".into());
        let mut marker = OverlaySpec::new(OverlayKind::Marker, OverlayTarget::cell("A", 2));
        marker.id = "o1".into();
        LayeredChartSpec {
            narrative_id: "n0".into(),
            order: 0,
            chart_type: ChartType::MultiBar,
            table: "t".into(),
            columns: vec!["A".into(), "B".into()],
            canvas: Size::default(),
            title: "t".into(),
            title_size: None,
            x_axis_label: None,
            y_axis_label: None,
            legend_position: None,
            background: None,
            line_width: None,
            series_colors: Default::default(),
            element_colors: vec![],
            overlays: vec![label, marker],
            notes: vec![],
            user_edits: vec![],
        }
    }

    fn overlay(id: &str) -> EditTarget {
        EditTarget::Overlay { id: id.into() }
    }

    #[test]
    fn relative_move_starts_from_placed_position() {
        let (t, pal) = (table(), Palette::default());
        let mut s = spec();
        let before = s.placed_position(0, &t, &pal).unwrap();
        let op = EditOp::new(overlay("o0"), EditAction::Move(MoveParams { dx: Some(10.0), dy: Some(-3.0), ..Default::default() }));
        s.apply_edit(&op, &t, &pal).unwrap();
        assert_eq!(s.overlays[0].manual.position, Some(Point { x: before.x + 10.0, y: before.y - 3.0 }));
    }

    #[test]
    fn every_inverse_restores_the_spec() {
        let (t, pal) = (table(), Palette::default());
        let red = Some(Rgb::RED);
        let ops = [
            EditOp::new(overlay("o0"), EditAction::Move(MoveParams { x: Some(300.0), y: Some(40.0), ..Default::default() })),
            EditOp::new(overlay("o1"), EditAction::Move(MoveParams { dx: Some(5.0), ..Default::default() })),
            EditOp::new(EditTarget::Legend, EditAction::Move(MoveParams { dy: Some(4.0), ..Default::default() })),
            EditOp::new(overlay("o1"), EditAction::Recolor { color: red }),
            EditOp::new(EditTarget::Element { column: "B".into(), row: 3 }, EditAction::Recolor { color: red }),
            EditOp::new(EditTarget::Series { column: "A".into() }, EditAction::Recolor { color: red }),
            EditOp::new(EditTarget::Canvas, EditAction::Recolor { color: red }),
            EditOp::new(overlay("o1"), EditAction::Resize { value: Some(4.0), width: None, height: None }),
            EditOp::new(EditTarget::Title, EditAction::Resize { value: Some(20.0), width: None, height: None }),
            EditOp::new(EditTarget::Canvas, EditAction::Resize { value: None, width: Some(640.0), height: Some(300.0) }),
            EditOp::new(overlay("o0"), EditAction::SetText { text: Some("three".into()) }),
            EditOp::new(EditTarget::Title, EditAction::SetText { text: Some("Sales".into()) }),
            EditOp::new(EditTarget::Axis { axis: Axis::Y }, EditAction::SetText { text: Some("USD".into()) }),
            EditOp::new(overlay("o0"), EditAction::RemoveOverlay),
            EditOp::new(
                EditTarget::Canvas,
                EditAction::AddOverlay {
                    spec: Box::new(OverlaySpec::new(OverlayKind::Highlight, OverlayTarget::rows("B", 1, 3))),
                    index: Some(0),
                },
            ),
        ];
        for op in ops {
            let mut s = spec();
            let inv = s.apply_edit(&op, &t, &pal).unwrap();
            assert_ne!(s, spec(), "{op:?} changed nothing");
            s.apply_edit(&inv, &t, &pal).unwrap();
            assert_eq!(s, spec(), "{op:?}");
        }
    }

    #[test]
    fn rejected_edits_leave_spec_unchanged() {
        let (t, pal) = (table(), Palette::default());
        let mut s = spec();
        let bad = [
            EditOp::new(overlay("zz"), EditAction::RemoveOverlay),
            EditOp::new(EditTarget::Element { column: "A".into(), row: 9 }, EditAction::Recolor { color: None }),
            EditOp::new(EditTarget::Canvas, EditAction::Resize { value: None, width: Some(50.0), height: None }),
            EditOp::new(EditTarget::Title, EditAction::Move(MoveParams::default())),
        ];
        for op in bad {
            assert!(s.apply_edit(&op, &t, &pal).is_err());
            assert_eq!(s, spec());
        }
    }

    #[test]
    fn logged_edit_is_recorded_and_serializes_flat() {
        let (t, pal) = (table(), Palette::default());
        let mut s = spec();
        let op = EditOp::new(overlay("o1"), EditAction::Recolor { color: Some(Rgb::BLACK) });
        s.apply_logged_edit(&op, &t, &pal).unwrap();
        assert_eq!(s.user_edits, std::slice::from_ref(&op));
        let json = serde_json::to_value(&op).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"target": {"kind": "overlay", "id": "o1"}, "action": "recolor", "params": {"color": "#000000"}})
        );
        let remove: EditOp = serde_json::from_str(r#"{"target":{"kind":"overlay","id":"o1"},"action":"remove_overlay"}"#).unwrap();
        assert_eq!(remove.action, EditAction::RemoveOverlay);
        assert_eq!(serde_json::from_value::<EditOp>(json).unwrap(), op);
    }
}
