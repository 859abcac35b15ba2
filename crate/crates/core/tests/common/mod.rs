//! Independent oracles shared by integration tests.
#![allow(dead_code)]

use narrachart::trend::{window_score, DetectorParams, Span};
use narrachart::PatternId;

/// Points a pattern needs, restated from the detector contract.
pub fn required_points(p: PatternId, min_span_len: usize) -> usize {
    use PatternId::*;
    match p {
        MonotoneRise | MonotoneDecline | SteadyRise | SteadyDecline => min_span_len.max(2),
        Fluctuation => min_span_len.max(4),
        SharpIncrease | SharpDecrease | EventPoint => 2,
        Peak | Trough => 3,
        DoubleBottom | DoubleTop => 5,
        TripleTop | HeadAndShoulders => 7,
        GlobalMax | GlobalMin | MeanLevel => 1,
    }
}

/// Exhaustive window scan: every window between non-null rows is scored,
/// windows strictly inside another passing window are dropped, and the rest
/// are chosen greedily (score desc, start asc, longer first) without overlap.
/// `None` means the series is too short for the pattern.
pub fn oracle_detect(series: &[Option<f64>], p: PatternId, params: &DetectorParams) -> Option<Vec<Span>> {
    let rows: Vec<usize> = (1..=series.len()).filter(|&r| series[r - 1].is_some()).collect();
    if rows.len() < required_points(p, params.min_span_len) {
        return None;
    }
    let mut passing = Vec::new();
    for (ai, &a) in rows.iter().enumerate() {
        for &b in &rows[ai..] {
            if let Some(score) = window_score(series, p, a, b, params) {
                passing.push(Span { start_row: a, end_row: b, score });
            }
        }
    }
    let maximal: Vec<Span> = passing
        .iter()
        .filter(|s| {
            !passing.iter().any(|o| {
                o.start_row <= s.start_row && s.end_row <= o.end_row && (o.start_row, o.end_row) != (s.start_row, s.end_row)
            })
        })
        .copied()
        .collect();
    let mut order = maximal;
    order.sort_by(|x, y| {
        y.score
            .total_cmp(&x.score)
            .then(x.start_row.cmp(&y.start_row))
            .then(y.end_row.cmp(&x.end_row))
    });
    let mut picked: Vec<Span> = Vec::new();
    for s in order {
        let clash = picked
            .iter()
            .any(|q| s.start_row < q.end_row && q.start_row < s.end_row);
        if !clash {
            picked.push(s);
        }
    }
    Some(picked)
}

use narrachart::overlay::{OverlayKind, OverlaySpec, OverlayTarget, PlacedOverlay, Shape};
use narrachart::render::{BaseChartLayout, ChartType, Size};
use narrachart::table::{Cell, ColumnKind, ColumnMeta, DataTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct OverlayCase {
    pub table: DataTable,
    pub columns: Vec<String>,
    pub chart_type: ChartType,
    pub canvas: Size,
    pub specs: Vec<OverlaySpec>,
}

const WORDS: [&str; 12] = [
    "revenue", "grew", "sharply", "after", "the", "quarter", "while", "costs", "fell", "to", "record", "lows",
];

fn words(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

/// A random table, chart and overlay set with no manual adjustments.
pub fn random_overlay_case(seed: u64) -> OverlayCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.gen_range(2..=24);
    let ncols = rng.gen_range(1..=4);
    let negative = rng.gen_bool(0.2);
    let mut meta = vec![ColumnMeta::new("Year", ColumnKind::Temporal)];
    let columns: Vec<String> = (0..ncols).map(|c| format!("S{c}")).collect();
    meta.extend(columns.iter().map(|c| ColumnMeta::new(c.clone(), ColumnKind::Numeric)));
    let data = (0..rows)
        .map(|r| {
            let mut row = vec![Cell::Text((2000 + r).to_string())];
            for _ in 0..ncols {
                let lo = if negative { -50.0 } else { 0.0 };
                row.push(Cell::Number((rng.gen_range(lo..100.0f64) * 10.0).round() / 10.0));
            }
            row
        })
        .collect();
    let table = DataTable::new("t", meta, data);
    let bar = rng.gen_bool(0.5);
    let chart_type = match (ncols > 1, bar) {
        (false, false) => ChartType::SingleLine,
        (true, false) => ChartType::MultiLine,
        (false, true) => ChartType::SingleBar,
        (true, true) => ChartType::MultiBar,
    };
    let canvas = Size::new(rng.gen_range(200..=1000) as f64, rng.gen_range(150..=700) as f64);
    let n = rng.gen_range(0..=10);
    let specs = (0..n)
        .map(|i| {
            let kind = OverlayKind::ALL[rng.gen_range(0..OverlayKind::ALL.len())];
            let column = columns[rng.gen_range(0..ncols)].clone();
            let a = rng.gen_range(1..=rows);
            let b = rng.gen_range(a..=rows);
            let target = match kind {
                OverlayKind::Marker | OverlayKind::Label | OverlayKind::SpecialTimePoint => OverlayTarget::cell(&column, a),
                _ => OverlayTarget::rows(&column, a, b),
            };
            let mut spec = OverlaySpec::new(kind, target);
            spec.id = format!("o{i}");
            spec.text_content = match kind {
                OverlayKind::Label => {
                    let n = rng.gen_range(1..=3);
                    Some(words(&mut rng, n))
                }
                OverlayKind::Description => {
                    let n = rng.gen_range(4..=25);
                    Some(format!("{}.", words(&mut rng, n)))
                }
                OverlayKind::OverallIndicator if rng.gen_bool(0.5) => Some(words(&mut rng, 2)),
                _ => None,
            };
            spec
        })
        .collect();
    OverlayCase {
        table,
        columns,
        chart_type,
        canvas,
        specs,
    }
}

/// Violations of the placement invariants: shapes outside the canvas,
/// intersecting text boxes, default markers whose radius is not 2.
pub fn layout_violations(layout: &BaseChartLayout, placed: &[PlacedOverlay]) -> Vec<String> {
    let canvas = layout.canvas_rect();
    let mut out = Vec::new();
    let mut boxes = Vec::new();
    for p in placed {
        for s in &p.shapes {
            if !s.inside(&canvas) {
                out.push(format!("{} {:?} leaves the canvas", p.spec.id, s));
            }
            if let Some(r) = s.text_rect() {
                boxes.push((p.spec.id.clone(), r));
            }
            if let Shape::Circle { r, .. } = s {
                if p.spec.kind == OverlayKind::Marker && p.spec.manual.size.is_none() && *r != 2.0 {
                    out.push(format!("{} marker radius {r}", p.spec.id));
                }
            }
        }
    }
    for (i, (a, ra)) in boxes.iter().enumerate() {
        for (b, rb) in &boxes[i + 1..] {
            if ra.intersects(rb) {
                out.push(format!("text boxes {a} and {b} intersect"));
            }
        }
    }
    out
}
