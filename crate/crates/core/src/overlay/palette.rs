use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{OverlayKind, PlacedOverlay};
use crate::color::Rgb;
use crate::render::BaseChartLayout;

/// Overlay colors and placement constants; loadable from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct Palette {
    /// Saturation multiplier for series not targeted by a highlight, in (0, 1].
    pub desaturation: f64,
    /// Accent colors cycled per binding record.
    pub accents: Vec<Rgb>,
    pub nudge_step: f64,
    pub marker_radius: f64,
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            desaturation: 0.25,
            accents: vec![Rgb::RED, Rgb::BLACK, Rgb(0x1f, 0x77, 0xb4), Rgb(0xff, 0x7f, 0x0e)],
            nudge_step: 8.0,
            marker_radius: 2.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum PaletteError {
    #[error("failed to read palette: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed palette: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid palette: {0}")]
    Invalid(String),
}

impl Palette {
    pub fn load(path: &Path) -> Result<Self, PaletteError> {
        let p: Palette = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PaletteError> {
        if !(self.desaturation > 0.0 && self.desaturation <= 1.0) {
            return Err(PaletteError::Invalid("desaturation must be in (0, 1]".into()));
        }
        if self.accents.is_empty() {
            return Err(PaletteError::Invalid("accents must not be empty".into()));
        }
        if !(self.nudge_step > 0.0 && self.marker_radius > 0.0) {
            return Err(PaletteError::Invalid("nudgeStep and markerRadius must be positive".into()));
        }
        Ok(())
    }

    fn accent(&self, record: Option<usize>) -> Rgb {
        self.accents[record.unwrap_or(0) % self.accents.len()]
    }
}

/// Colors series and overlays. Series targeted by a highlight keep their
/// base color and all others are desaturated; with no highlight every series
/// keeps its base color. Strokes take the accent of their source record.
/// Colors derive from base colors and specs only, so applying twice changes
/// nothing.
pub fn apply_palette(
    layout: &BaseChartLayout,
    placed: &[PlacedOverlay],
    palette: &Palette,
) -> (BaseChartLayout, Vec<PlacedOverlay>) {
    let highlighted: BTreeSet<&str> = placed
        .iter()
        .filter(|p| p.spec.kind == OverlayKind::Highlight)
        .flat_map(|p| p.spec.target.columns.iter().map(String::as_str))
        .collect();
    let mut layout = layout.clone();
    for s in &mut layout.series {
        s.color = if highlighted.is_empty() || highlighted.contains(s.column.as_str()) {
            s.base_color
        } else {
            s.base_color.desaturate(palette.desaturation)
        };
    }
    let placed = placed
        .iter()
        .map(|p| {
            let mut p = p.clone();
            let accent = palette.accent(p.spec.source_record);
            match p.spec.kind {
                OverlayKind::Highlight => {
                    let column = p.spec.target.columns.first();
                    p.style.stroke_color = column.and_then(|c| layout.series_color(c)).unwrap_or(Rgb::BLACK);
                }
                OverlayKind::Label | OverlayKind::Description => {
                    p.style.stroke_color = Rgb::BLACK;
                    p.style.fill_color = Some(Rgb::WHITE);
                }
                OverlayKind::Background => {
                    p.style.stroke_color = accent;
                    p.style.fill_color = Some(accent);
                }
                OverlayKind::Marker => {
                    p.style.stroke_color = accent;
                    p.style.fill_color = Some(Rgb::WHITE);
                }
                OverlayKind::BoundingBox
                | OverlayKind::TrendLine
                | OverlayKind::OverallIndicator
                | OverlayKind::SpecialTimePoint => {
                    p.style.stroke_color = accent;
                    p.style.fill_color = None;
                }
            }
            if let Some(c) = p.spec.manual.stroke_color {
                p.style.stroke_color = c;
            }
            if let Some(c) = p.spec.manual.fill_color {
                p.style.fill_color = Some(c);
            }
            if let Some(w) = p.spec.manual.stroke_width {
                p.style.stroke_width = w;
            }
            p
        })
        .collect();
    (layout, placed)
}
