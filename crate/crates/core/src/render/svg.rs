//! SVG 1.1 output. Base groups come first and the overlay group last;
//! element order follows the layout and the overlay list, so equal inputs
//! give byte-identical documents.

use std::fmt::Write;

use super::{BaseChartLayout, ElementGeometry, Point, Rect, FONT_SIZE, FONT_SIZE_SMALL, LINE_HEIGHT};
use crate::color::Rgb;
use crate::overlay::{OverlayKind, PlacedOverlay, Shape, Style};

const AXIS_COLOR: Rgb = Rgb(0x44, 0x44, 0x44);
const GRID_COLOR: Rgb = Rgb(0xe6, 0xe6, 0xe6);
const TEXT_COLOR: Rgb = Rgb(0x22, 0x22, 0x22);
const FONT: &str = "font-family=\"DejaVu Sans Mono, monospace\"";

/// Fixed-precision number without trailing zeros.
fn n(v: f64) -> String {
    let s = format!("{:.2}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn esc(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn rect(out: &mut String, r: &Rect, attrs: &str) {
    let _ = writeln!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" {attrs}/>",
        n(r.x),
        n(r.y),
        n(r.w),
        n(r.h)
    );
}

fn line(out: &mut String, a: Point, b: Point, attrs: &str) {
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" {attrs}/>",
        n(a.x),
        n(a.y),
        n(b.x),
        n(b.y)
    );
}

fn text(out: &mut String, at: Point, size: f64, anchor: &str, color: Rgb, content: &str) {
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" {FONT} font-size=\"{}\" text-anchor=\"{anchor}\" fill=\"{color}\">{}</text>",
        n(at.x),
        n(at.y),
        n(size),
        esc(content)
    );
}

fn points(ps: &[Point]) -> String {
    ps.iter().map(|p| format!("{},{}", n(p.x), n(p.y))).collect::<Vec<_>>().join(" ")
}

fn stroke_attrs(style: &Style) -> String {
    let mut a = format!("stroke=\"{}\" stroke-width=\"{}\"", style.stroke_color, n(style.stroke_width));
    if style.dashed {
        a.push_str(" stroke-dasharray=\"4 3\"");
    }
    a
}

pub fn render_svg(layout: &BaseChartLayout, overlays: &[PlacedOverlay]) -> String {
    let (w, h) = (layout.canvas.width, layout.canvas.height);
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        n(w),
        n(h),
        n(w),
        n(h)
    );

    out.push_str("<g id=\"background\">\n");
    rect(&mut out, &Rect::new(0.0, 0.0, w, h), &format!("fill=\"{}\"", layout.background));
    out.push_str("</g>\n");

    out.push_str("<g id=\"title\">\n");
    text(&mut out, layout.title_at, layout.title_size, "middle", TEXT_COLOR, &layout.title);
    out.push_str("</g>\n");

    out.push_str("<g id=\"axes\">\n");
    let plot = layout.plot;
    for t in &layout.y_ticks {
        line(
            &mut out,
            Point { x: plot.x, y: t.position },
            Point { x: plot.right(), y: t.position },
            &format!("stroke=\"{GRID_COLOR}\" stroke-width=\"1\""),
        );
        text(
            &mut out,
            Point { x: plot.x - 6.0, y: t.position + 4.0 },
            FONT_SIZE_SMALL,
            "end",
            TEXT_COLOR,
            &t.label,
        );
    }
    let axis = format!("stroke=\"{AXIS_COLOR}\" stroke-width=\"1\"");
    let baseline = layout.y_of(0.0_f64.clamp(layout.y_domain.0, layout.y_domain.1));
    line(&mut out, Point { x: plot.x, y: plot.y }, Point { x: plot.x, y: plot.bottom() }, &axis);
    line(&mut out, Point { x: plot.x, y: baseline }, Point { x: plot.right(), y: baseline }, &axis);
    for t in &layout.x_ticks {
        line(
            &mut out,
            Point { x: t.position, y: plot.bottom() },
            Point { x: t.position, y: plot.bottom() + 4.0 },
            &axis,
        );
        text(
            &mut out,
            Point { x: t.position, y: plot.bottom() + 16.0 },
            FONT_SIZE_SMALL,
            "middle",
            TEXT_COLOR,
            &t.label,
        );
    }
    if let Some(label) = &layout.x_axis_label {
        text(
            &mut out,
            Point { x: plot.x + plot.w / 2.0, y: h - 4.0 },
            FONT_SIZE_SMALL,
            "middle",
            TEXT_COLOR,
            label,
        );
    }
    if let Some(label) = &layout.y_axis_label {
        text(&mut out, Point { x: 4.0, y: plot.y - 6.0 }, FONT_SIZE_SMALL, "start", TEXT_COLOR, label);
    }
    out.push_str("</g>\n");

    out.push_str("<g id=\"base\">\n");
    if layout.chart_type.is_bar() {
        for e in &layout.elements {
            if let ElementGeometry::Bar(r) = &e.geometry {
                rect(&mut out, r, &format!("fill=\"{}\"", layout.element_color(&e.column, e.row)));
            }
        }
    } else {
        for s in &layout.series {
            // Nulls split the polyline into separate runs.
            let mut runs: Vec<Vec<Point>> = Vec::new();
            let mut last_row = 0;
            for e in layout.elements.iter().filter(|e| e.column == s.column) {
                let p = e.anchor();
                match runs.last_mut() {
                    Some(run) if e.row == last_row + 1 => run.push(p),
                    _ => runs.push(vec![p]),
                }
                last_row = e.row;
            }
            for run in &runs {
                if run.len() > 1 {
                    let _ = writeln!(
                        out,
                        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"/>",
                        points(run),
                        s.color,
                        n(layout.line_width)
                    );
                }
            }
            for e in layout.elements.iter().filter(|e| e.column == s.column) {
                let p = e.anchor();
                let _ = writeln!(
                    out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>",
                    n(p.x),
                    n(p.y),
                    n(layout.line_width),
                    layout.element_color(&e.column, e.row)
                );
            }
        }
    }
    out.push_str("</g>\n");

    out.push_str("<g id=\"legend\">\n");
    for entry in &layout.legend {
        let color = layout.series_color(&entry.column).unwrap_or(Rgb::BLACK);
        rect(&mut out, &entry.swatch, &format!("fill=\"{color}\""));
        text(&mut out, entry.label_at, FONT_SIZE_SMALL, "start", TEXT_COLOR, &entry.column);
    }
    out.push_str("</g>\n");

    out.push_str("<g id=\"overlays\">\n");
    for p in overlays {
        overlay(&mut out, p);
    }
    out.push_str("</g>\n</svg>\n");
    out
}

fn overlay(out: &mut String, p: &PlacedOverlay) {
    let _ = writeln!(out, "<g id=\"overlay-{}\" class=\"{}\">", esc(&p.spec.id), p.spec.kind.as_str());
    let style = &p.style;
    for shape in &p.shapes {
        match shape {
            Shape::Series { .. } => {}
            Shape::Circle { cx, cy, r } => {
                let fill = style.fill_color.map_or("none".to_string(), |c| c.to_string());
                let _ = writeln!(
                    out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\" {}/>",
                    n(*cx),
                    n(*cy),
                    n(*r),
                    stroke_attrs(style)
                );
            }
            Shape::Rect { rect: r } => {
                let attrs = if p.spec.kind == OverlayKind::Background {
                    let fill = style.fill_color.unwrap_or(style.stroke_color);
                    format!("fill=\"{fill}\" fill-opacity=\"{}\"", n(style.opacity))
                } else {
                    let fill = style.fill_color.map_or("none".to_string(), |c| c.to_string());
                    format!("fill=\"{fill}\" {}", stroke_attrs(style))
                };
                rect(out, r, &attrs);
            }
            Shape::Arrow { from, to, head } => {
                line(out, *from, *to, &stroke_attrs(style));
                let _ = writeln!(
                    out,
                    "<polygon points=\"{}\" fill=\"{}\"/>",
                    points(head),
                    style.stroke_color
                );
            }
            Shape::HLine { x1, x2, y } => {
                line(out, Point { x: *x1, y: *y }, Point { x: *x2, y: *y }, &stroke_attrs(style));
            }
            Shape::VLine { x, y1, y2 } => {
                line(out, Point { x: *x, y: *y1 }, Point { x: *x, y: *y2 }, &stroke_attrs(style));
            }
            Shape::TextBox { rect: r, lines } => {
                let fill = style.fill_color.unwrap_or(Rgb::WHITE);
                rect(out, r, &format!("fill=\"{fill}\" fill-opacity=\"0.85\""));
                let color = if matches!(p.spec.kind, OverlayKind::Label | OverlayKind::Description) {
                    style.stroke_color
                } else {
                    TEXT_COLOR
                };
                for (i, l) in lines.iter().enumerate() {
                    let at = Point {
                        x: r.x + 4.0,
                        y: r.y + 4.0 + LINE_HEIGHT * i as f64 + FONT_SIZE - 1.0,
                    };
                    text(out, at, FONT_SIZE, "start", color, l);
                }
            }
        }
    }
    out.push_str("</g>\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlay::{place_overlays, OverlaySpec, OverlayTarget, Palette};
    use crate::render::{layout_base_chart, ChartType, Size};
    use crate::table::DataTable;

    fn layout(t: ChartType) -> BaseChartLayout {
        let t_ = DataTable::from_csv_str("Sales & costs", "Year,A,B\n2001,2,1\n2002,,3\n2003,9,5\n2004,1,2\n").unwrap();
        layout_base_chart(&t_, &["A".into(), "B".into()], t, Size::default()).unwrap()
    }

    fn overlay_group(svg: &str) -> &str {
        &svg[svg.find("<g id=\"overlays\">").unwrap()..]
    }

    #[test]
    fn no_overlays_leaves_overlay_group_empty() {
        let svg = render_svg(&layout(ChartType::MultiBar), &[]);
        assert!(svg.contains("<g id=\"overlays\">\n</g>"));
        assert!(svg.contains("Sales &amp; costs"));
        assert_eq!(svg.matches("<rect").count(), 1 + 7 + 2);
    }

    #[test]
    fn one_marker_is_one_circle_of_radius_two() {
        let l = layout(ChartType::MultiBar);
        let mut s = OverlaySpec::new(OverlayKind::Marker, OverlayTarget::cell("A", 3));
        s.id = "o0".into();
        let placed = place_overlays(&[s], &l, &Palette::default()).unwrap();
        let svg = render_svg(&l, &placed);
        let group = overlay_group(&svg);
        assert_eq!(group.matches("<circle").count(), 1);
        assert!(group.contains("r=\"2\""));
    }

    #[test]
    fn overlay_group_is_last() {
        let svg = render_svg(&layout(ChartType::MultiLine), &[]);
        let pos = |id: &str| svg.find(&format!("<g id=\"{id}\"")).unwrap();
        for base in ["background", "title", "axes", "base", "legend"] {
            assert!(pos(base) < pos("overlays"));
        }
    }

    #[test]
    fn null_breaks_line() {
        let svg = render_svg(&layout(ChartType::MultiLine), &[]);
        // A has rows 1, 3, 4: only the 3-4 run forms a polyline; B has one run.
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn deterministic() {
        let l = layout(ChartType::MultiBar);
        assert_eq!(render_svg(&l, &[]), render_svg(&l, &[]));
    }
}
