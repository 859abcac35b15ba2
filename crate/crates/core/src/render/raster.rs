//! Rasterizes the SVG subset that [`render_svg`](super::render_svg) emits
//! (rect, circle, line, polyline, polygon, text) into an RGBA PNG.
//!
//! Rect fills and glyphs are area-weighted per pixel; strokes, circles and
//! polygons are sampled at pixel centers. Text uses the 8x8 public-domain
//! bitmap font, scaled so one glyph advance matches the layout's
//! `CHAR_ADVANCE`.

use std::io::Cursor;

use image::{ImageFormat, Rgba, RgbaImage};
use quick_xml::events::Event;
use quick_xml::Reader;
use thiserror::Error;

use super::CHAR_ADVANCE;
use crate::color::Rgb;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("malformed SVG: {0}")]
    Svg(String),
    #[error("scale must be positive")]
    InvalidScale,
    #[error("image encoding failed: {0}")]
    Image(#[from] image::ImageError),
}

#[derive(Debug, Default, Clone)]
struct Attrs(Vec<(String, String)>);

impl Attrs {
    fn get(&self, k: &str) -> Option<&str> {
        self.0.iter().find(|(n, _)| n == k).map(|(_, v)| v.as_str())
    }

    fn num(&self, k: &str) -> f64 {
        self.get(k).and_then(|v| v.trim().parse().ok()).unwrap_or(0.0)
    }

    fn color(&self, k: &str) -> Option<Rgb> {
        self.get(k).and_then(|v| v.parse().ok())
    }

    fn opacity(&self, k: &str) -> f64 {
        self.get(k).and_then(|v| v.parse().ok()).unwrap_or(1.0)
    }
}

struct Canvas {
    img: RgbaImage,
    scale: f64,
}

impl Canvas {
    fn blend(&mut self, x: i64, y: i64, c: Rgb, alpha: f64) {
        if x < 0 || y < 0 || x >= self.img.width() as i64 || y >= self.img.height() as i64 {
            return;
        }
        let p = self.img.get_pixel_mut(x as u32, y as u32);
        let mix = |dst: u8, src: u8| (dst as f64 * (1.0 - alpha) + src as f64 * alpha).round() as u8;
        *p = Rgba([mix(p[0], c.0), mix(p[1], c.1), mix(p[2], c.2), 255]);
    }

    /// Pixel range whose centers fall in [a, b) in user units.
    fn span(&self, a: f64, b: f64, limit: u32) -> std::ops::Range<i64> {
        let lo = (a * self.scale - 0.5).ceil().max(0.0) as i64;
        let hi = ((b * self.scale - 0.5).ceil() as i64).min(limit as i64);
        lo..hi.max(lo)
    }

    /// Calls `f(px, py, coverage)` for every pixel the rect overlaps, with
    /// coverage the overlapped fraction of the pixel's area.
    fn cover(&self, x: f64, y: f64, w: f64, h: f64, mut f: impl FnMut(i64, i64, f64)) {
        let s = self.scale;
        let (x0, y0, x1, y1) = (x * s, y * s, (x + w) * s, (y + h) * s);
        let (wi, hi) = (self.img.width() as i64, self.img.height() as i64);
        let cols = (x0.floor().max(0.0) as i64)..(x1.ceil() as i64).min(wi);
        for py in (y0.floor().max(0.0) as i64)..(y1.ceil() as i64).min(hi) {
            let cy = (y1.min(py as f64 + 1.0) - y0.max(py as f64)).max(0.0);
            for px in cols.clone() {
                let cx = (x1.min(px as f64 + 1.0) - x0.max(px as f64)).max(0.0);
                if cx * cy > 0.0 {
                    f(px, py, cx * cy);
                }
            }
        }
    }

    fn fill_rect(&mut self, x: f64, y: f64, w: f64, h: f64, c: Rgb, alpha: f64) {
        let mut hits = Vec::new();
        self.cover(x, y, w, h, |px, py, cov| hits.push((px, py, cov)));
        for (px, py, cov) in hits {
            self.blend(px, py, c, alpha * cov);
        }
    }

    /// Paints pixels whose centers are within `half` of the segment; `dash`
    /// gives on/off lengths along the segment.
    fn stroke_segment(&mut self, a: (f64, f64), b: (f64, f64), width: f64, c: Rgb, dash: Option<(f64, f64)>) {
        let half = (width / 2.0).max(0.5 / self.scale);
        let (x0, x1) = (a.0.min(b.0) - half, a.0.max(b.0) + half);
        let (y0, y1) = (a.1.min(b.1) - half, a.1.max(b.1) + half);
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        let (wi, hi) = (self.img.width(), self.img.height());
        for py in self.span(y0, y1, hi) {
            for px in self.span(x0, x1, wi) {
                let (cx, cy) = ((px as f64 + 0.5) / self.scale, (py as f64 + 0.5) / self.scale);
                let t = if len2 > 0.0 { (((cx - a.0) * dx + (cy - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
                let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
                if (cx - qx).hypot(cy - qy) > half {
                    continue;
                }
                if let Some((on, off)) = dash {
                    if (t * len2.sqrt()) % (on + off) >= on {
                        continue;
                    }
                }
                self.blend(px, py, c, 1.0);
            }
        }
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: Option<Rgb>, stroke: Option<(Rgb, f64)>) {
        let outer = r + stroke.map_or(0.0, |s| s.1 / 2.0);
        let (wi, hi) = (self.img.width(), self.img.height());
        for py in self.span(cy - outer, cy + outer, hi) {
            for px in self.span(cx - outer, cx + outer, wi) {
                let d = ((px as f64 + 0.5) / self.scale - cx).hypot((py as f64 + 0.5) / self.scale - cy);
                if let Some((c, w)) = stroke {
                    if (d - r).abs() <= w / 2.0 {
                        self.blend(px, py, c, 1.0);
                        continue;
                    }
                }
                if let Some(c) = fill {
                    if d <= r {
                        self.blend(px, py, c, 1.0);
                    }
                }
            }
        }
    }

    /// Even-odd scanline fill.
    fn fill_polygon(&mut self, pts: &[(f64, f64)], c: Rgb) {
        if pts.len() < 3 {
            return;
        }
        let y0 = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let y1 = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let hi = self.img.height();
        for py in self.span(y0, y1, hi) {
            let y = (py as f64 + 0.5) / self.scale;
            let mut xs: Vec<f64> = Vec::new();
            for i in 0..pts.len() {
                let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                if (a.1 <= y && b.1 > y) || (b.1 <= y && a.1 > y) {
                    xs.push(a.0 + (y - a.1) / (b.1 - a.1) * (b.0 - a.0));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks(2) {
                if let [a, b] = pair {
                    let wi = self.img.width();
                    for px in self.span(*a, *b, wi) {
                        self.blend(px, py, c, 1.0);
                    }
                }
            }
        }
    }

    fn text(&mut self, x: f64, baseline: f64, size: f64, anchor: &str, c: Rgb, content: &str) {
        let unit = size * CHAR_ADVANCE / 8.0;
        let width = content.chars().count() as f64 * size * CHAR_ADVANCE;
        let left = match anchor {
            "middle" => x - width / 2.0,
            "end" => x - width,
            _ => x,
        };
        let top = baseline - 7.0 * unit;
        // Glyph cells share pixels; coverage is summed per pixel, then blended once.
        let mut coverage: std::collections::BTreeMap<(i64, i64), f64> = std::collections::BTreeMap::new();
        for (i, ch) in content.chars().enumerate() {
            let Some(glyph) = glyph(ch) else { continue };
            let gx = left + i as f64 * 8.0 * unit;
            for (row, bits) in glyph.iter().enumerate() {
                for col in 0..8 {
                    if bits & (1 << col) != 0 {
                        self.cover(gx + col as f64 * unit, top + row as f64 * unit, unit, unit, |px, py, cov| {
                            *coverage.entry((py, px)).or_default() += cov;
                        });
                    }
                }
            }
        }
        for ((py, px), cov) in coverage {
            self.blend(px, py, c, cov.min(1.0));
        }
    }
}

fn glyph(ch: char) -> Option<[u8; 8]> {
    use font8x8::UnicodeFonts;
    font8x8::BASIC_FONTS
        .get(ch)
        .or_else(|| font8x8::LATIN_FONTS.get(ch))
        .or_else(|| font8x8::BASIC_FONTS.get('?'))
}

fn parse_points(s: &str) -> Vec<(f64, f64)> {
    s.split_whitespace()
        .filter_map(|p| {
            let (x, y) = p.split_once(',')?;
            Some((x.parse().ok()?, y.parse().ok()?))
        })
        .collect()
}

fn dash(a: &Attrs) -> Option<(f64, f64)> {
    let v = a.get("stroke-dasharray")?;
    let mut it = v.split_whitespace().filter_map(|x| x.parse().ok());
    Some((it.next()?, it.next()?))
}

fn draw(canvas: &mut Canvas, name: &str, a: &Attrs, content: &str) {
    let stroke = a.color("stroke");
    let sw = if a.get("stroke-width").is_some() { a.num("stroke-width") } else { 1.0 };
    match name {
        "rect" => {
            let (x, y, w, h) = (a.num("x"), a.num("y"), a.num("width"), a.num("height"));
            if let Some(f) = a.color("fill") {
                canvas.fill_rect(x, y, w, h, f, a.opacity("fill-opacity") * a.opacity("opacity"));
            }
            if let Some(s) = stroke.filter(|_| sw > 0.0) {
                let d = dash(a);
                let corners = [(x, y), (x + w, y), (x + w, y + h), (x, y + h)];
                for i in 0..4 {
                    canvas.stroke_segment(corners[i], corners[(i + 1) % 4], sw, s, d);
                }
            }
        }
        "circle" => {
            let stroke = stroke.filter(|_| sw > 0.0).map(|s| (s, sw));
            canvas.circle(a.num("cx"), a.num("cy"), a.num("r"), a.color("fill"), stroke);
        }
        "line" => {
            if let Some(s) = stroke {
                canvas.stroke_segment((a.num("x1"), a.num("y1")), (a.num("x2"), a.num("y2")), sw, s, dash(a));
            }
        }
        "polyline" => {
            if let Some(s) = stroke {
                let pts = parse_points(a.get("points").unwrap_or(""));
                for w in pts.windows(2) {
                    canvas.stroke_segment(w[0], w[1], sw, s, dash(a));
                }
            }
        }
        "polygon" => {
            if let Some(f) = a.color("fill") {
                canvas.fill_polygon(&parse_points(a.get("points").unwrap_or("")), f);
            }
        }
        "text" => {
            let fill = a.color("fill").unwrap_or(Rgb::BLACK);
            let size = if a.get("font-size").is_some() { a.num("font-size") } else { 12.0 };
            canvas.text(a.num("x"), a.num("y"), size, a.get("text-anchor").unwrap_or("start"), fill, content);
        }
        _ => {}
    }
}

fn attrs_of(e: &quick_xml::events::BytesStart<'_>) -> Result<Attrs, RasterError> {
    let mut out = Vec::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| RasterError::Svg(err.to_string()))?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr
            .unescape_value()
            .map_err(|err| RasterError::Svg(err.to_string()))?
            .into_owned();
        out.push((key, value));
    }
    Ok(Attrs(out))
}

/// Width and height of the SVG root in user units.
fn root_size(a: &Attrs) -> Result<(f64, f64), RasterError> {
    let (w, h) = (a.num("width"), a.num("height"));
    if w > 0.0 && h > 0.0 {
        Ok((w, h))
    } else {
        Err(RasterError::Svg("root element lacks width and height".into()))
    }
}

/// Renders `svg` at `scale` pixels per user unit into PNG bytes of size
/// `round(width * scale) x round(height * scale)`.
pub fn render_png(svg: &str, scale: f64) -> Result<Vec<u8>, RasterError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(RasterError::InvalidScale);
    }
    let mut reader = Reader::from_str(svg);
    let mut canvas: Option<Canvas> = None;
    let mut pending_text: Option<Attrs> = None;
    let mut text_buf = String::new();
    loop {
        let event = reader.read_event().map_err(|e| RasterError::Svg(e.to_string()))?;
        match event {
            Event::Start(e) | Event::Empty(e) if e.name().as_ref() == b"svg" => {
                let (w, h) = root_size(&attrs_of(&e)?)?;
                let img = RgbaImage::from_pixel(
                    (w * scale).round().max(1.0) as u32,
                    (h * scale).round().max(1.0) as u32,
                    Rgba([255, 255, 255, 255]),
                );
                canvas = Some(Canvas { img, scale });
            }
            Event::Start(e) if e.name().as_ref() == b"text" => {
                pending_text = Some(attrs_of(&e)?);
                text_buf.clear();
            }
            Event::Text(t) if pending_text.is_some() => {
                text_buf.push_str(&t.unescape().map_err(|e| RasterError::Svg(e.to_string()))?);
            }
            Event::End(e) if e.name().as_ref() == b"text" => {
                if let (Some(c), Some(a)) = (canvas.as_mut(), pending_text.take()) {
                    draw(c, "text", &a, &text_buf);
                }
            }
            Event::Empty(e) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                let a = attrs_of(&e)?;
                let c = canvas
                    .as_mut()
                    .ok_or_else(|| RasterError::Svg(format!("<{name}> outside <svg>")))?;
                draw(c, &name, &a, "");
            }
            Event::Eof => break,
            _ => {}
        }
    }
    let canvas = canvas.ok_or_else(|| RasterError::Svg("no <svg> element".into()))?;
    let mut bytes = Vec::new();
    canvas.img.write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)?;
    Ok(bytes)
}

/// Width and height of PNG bytes.
pub fn png_dimensions(png: &[u8]) -> Result<(u32, u32), RasterError> {
    let img = image::load_from_memory_with_format(png, ImageFormat::Png)?;
    Ok((img.width(), img.height()))
}
