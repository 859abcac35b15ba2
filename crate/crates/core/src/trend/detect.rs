//! Window predicates and detectors for trend patterns.
//!
//! Nulls are dropped before analysis; a window is a run of consecutive
//! non-null points `v[i..=j]` with steps `d[k] = v[k+1] - v[k]`. Three
//! series-level quantities make the predicates invariant to `a*x + b`, `a > 0`:
//!
//! * `S`, the mean absolute step of the whole series,
//! * `R`, the range of the series,
//! * `P = extremum_prominence * R`, the prominence threshold.
//!
//! Predicates (`m = j - i + 1`):
//!
//! | pattern | holds when |
//! |---|---|
//! | monotone_rise / _decline | `m >= max(2, min_span_len)`, every `d > 0` (`< 0`) |
//! | steady_rise / _decline | monotone, and `std(|d|) / mean(|d|) <= steady_cv` |
//! | sharp_increase / _decrease | `m >= 2`, monotone, `mean(|d|) > sharp_slope_factor * S` |
//! | fluctuation | `m >= max(4, min_span_len)`, every `|d| >= P`, `d > 0`, signs alternate |
//! | peak (trough) | up-run then down-run (down then up), apex `v[p]` with `v[p] - max(v[i], v[j]) >= P` |
//! | double_bottom | legs down,up,down,up with lows `a`, `b` and middle high `c`: `|a - b| <= P`, `c - max(a, b) >= P`, `c < v[i]`, `c < v[j]` |
//! | double_top | mirror of double_bottom |
//! | triple_top | legs up,down,up,down,up,down, highs `h1..h3`, lows `l1, l2`: `max(h) - min(h) <= P`, `min(h) - max(l) >= P`, `v[i], v[j] < min(l)` |
//! | head_and_shoulders | same legs: `h2 - max(h1, h3) >= P`, `min(h1, h3) - max(l) >= P`, `v[i], v[j] < min(l)` |
//! | global_max / _min | `m = 1`, `v[i]` equals the series max (min) |
//! | mean_level | the window is the whole series |
//! | event_point | `m = 1`, `i >= 1`, `|d[i-1]| > sharp_slope_factor * S` |
//!
//! Legs are maximal strictly monotone runs; a zero step never belongs to a
//! leg. Detection returns the candidate windows that are not strictly
//! contained in another candidate, then keeps a non-overlapping subset
//! greedily by score (ties toward the earliest start). Windows that only
//! touch at an endpoint do not overlap.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::PatternId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct DetectorParams {
    pub sharp_slope_factor: f64,
    pub steady_cv: f64,
    /// Fraction of the series range a turning point must stand out by.
    pub extremum_prominence: f64,
    pub min_span_len: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            sharp_slope_factor: 2.0,
            steady_cv: 0.5,
            extremum_prominence: 0.1,
            min_span_len: 3,
        }
    }
}

impl DetectorParams {
    pub fn is_valid(&self) -> bool {
        self.sharp_slope_factor > 0.0 && self.steady_cv > 0.0 && self.extremum_prominence > 0.0 && self.min_span_len > 0
    }
}

/// A 1-based inclusive row interval with a match score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Span {
    pub start_row: usize,
    pub end_row: usize,
    pub score: f64,
}

impl Span {
    pub fn new(start_row: usize, end_row: usize) -> Self {
        Self {
            start_row,
            end_row,
            score: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.end_row + 1 - self.start_row
    }

    pub fn is_empty(&self) -> bool {
        self.end_row < self.start_row
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("{pattern} needs at least {needed} non-null points, got {got}")]
    SeriesTooShort {
        pattern: PatternId,
        needed: usize,
        got: usize,
    },
    #[error("series has no non-null points")]
    EmptySeries,
    #[error("{0} is not a summary statistic")]
    NotASummary(PatternId),
    #[error("detector parameters must be strictly positive")]
    InvalidParams,
}

/// Minimum number of non-null points a pattern needs.
pub fn min_points(pattern: PatternId, params: &DetectorParams) -> usize {
    use PatternId::*;
    match pattern {
        MonotoneRise | MonotoneDecline | SteadyRise | SteadyDecline => params.min_span_len.max(2),
        SharpIncrease | SharpDecrease | EventPoint => 2,
        Fluctuation => params.min_span_len.max(4),
        Peak | Trough => 3,
        DoubleBottom | DoubleTop => 5,
        TripleTop | HeadAndShoulders => 7,
        GlobalMax | GlobalMin | MeanLevel => 1,
    }
}

/// Non-null points with their 1-based rows plus the series-level scales.
struct Series {
    rows: Vec<usize>,
    v: Vec<f64>,
    mean_abs_step: f64,
    range: f64,
    prominence: f64,
}

impl Series {
    fn new(series: &[Option<f64>], params: &DetectorParams) -> Self {
        let (rows, v): (Vec<usize>, Vec<f64>) = series
            .iter()
            .enumerate()
            .filter_map(|(i, x)| x.filter(|x| x.is_finite()).map(|x| (i + 1, x)))
            .unzip();
        let mean_abs_step = if v.len() > 1 {
            v.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (v.len() - 1) as f64
        } else {
            0.0
        };
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let range = if v.is_empty() { 0.0 } else { max - min };
        Self {
            rows,
            v,
            mean_abs_step,
            range,
            prominence: params.extremum_prominence * range,
        }
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    fn step(&self, k: usize) -> f64 {
        self.v[k + 1] - self.v[k]
    }

    fn coverage(&self, i: usize, j: usize) -> f64 {
        if self.len() < 2 {
            1.0
        } else {
            (j - i) as f64 / (self.len() - 1) as f64
        }
    }

    fn rel(&self, x: f64) -> f64 {
        if self.range > 0.0 {
            (x / self.range).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Sign of each leg and its turning indices for a window, or `None` when a
/// zero step occurs. Returns the indices where the step sign changes.
fn legs(s: &Series, i: usize, j: usize) -> Option<(Vec<i8>, Vec<usize>)> {
    let mut signs = Vec::new();
    let mut turns = Vec::new();
    for k in i..j {
        let d = s.step(k);
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            return None;
        };
        match signs.last() {
            Some(&last) if last == sign => {}
            Some(_) => {
                turns.push(k);
                signs.push(sign);
            }
            None => signs.push(sign),
        }
    }
    Some((signs, turns))
}

fn all_steps(s: &Series, i: usize, j: usize, positive: bool) -> bool {
    (i..j).all(|k| if positive { s.step(k) > 0.0 } else { s.step(k) < 0.0 })
}

fn abs_steps(s: &Series, i: usize, j: usize) -> Vec<f64> {
    (i..j).map(|k| s.step(k).abs()).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn coefficient_of_variation(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    var.sqrt() / m
}

/// Predicate + score on compressed indices `i..=j`.
fn score_compressed(s: &Series, pattern: PatternId, i: usize, j: usize, params: &DetectorParams) -> Option<f64> {
    use PatternId::*;
    if j >= s.len() || i > j {
        return None;
    }
    let m = j - i + 1;
    let p = s.prominence;
    match pattern {
        MonotoneRise | MonotoneDecline => {
            let up = pattern == MonotoneRise;
            (m >= min_points(pattern, params) && all_steps(s, i, j, up)).then(|| s.coverage(i, j))
        }
        SteadyRise | SteadyDecline => {
            let up = pattern == SteadyRise;
            if m < min_points(pattern, params) || !all_steps(s, i, j, up) {
                return None;
            }
            let cv = coefficient_of_variation(&abs_steps(s, i, j));
            (cv <= params.steady_cv).then(|| s.coverage(i, j) * (1.0 - 0.5 * cv / params.steady_cv))
        }
        SharpIncrease | SharpDecrease => {
            let up = pattern == SharpIncrease;
            if m < 2 || !all_steps(s, i, j, up) {
                return None;
            }
            let threshold = params.sharp_slope_factor * s.mean_abs_step;
            let slope = mean(&abs_steps(s, i, j));
            (slope > threshold).then(|| 1.0 - threshold / slope)
        }
        Fluctuation => {
            if m < min_points(pattern, params) {
                return None;
            }
            let mut prev = 0.0;
            for k in i..j {
                let d = s.step(k);
                if d == 0.0 || d.abs() < p || (k > i && (d > 0.0) == (prev > 0.0)) {
                    return None;
                }
                prev = d;
            }
            Some(s.coverage(i, j))
        }
        Peak | Trough => {
            let (signs, turns) = legs(s, i, j)?;
            let expected: &[i8] = if pattern == Peak { &[1, -1] } else { &[-1, 1] };
            if signs != expected {
                return None;
            }
            let apex = s.v[turns[0]];
            let depth = if pattern == Peak {
                apex - s.v[i].max(s.v[j])
            } else {
                s.v[i].min(s.v[j]) - apex
            };
            (depth > 0.0 && depth >= p).then(|| s.rel(depth))
        }
        DoubleBottom | DoubleTop => {
            let (signs, turns) = legs(s, i, j)?;
            let bottom = pattern == DoubleBottom;
            let expected: &[i8] = if bottom { &[-1, 1, -1, 1] } else { &[1, -1, 1, -1] };
            if signs != expected {
                return None;
            }
            let (a, c, b) = (s.v[turns[0]], s.v[turns[1]], s.v[turns[2]]);
            let (vi, vj) = (s.v[i], s.v[j]);
            let (depth, neckline_ok) = if bottom {
                (c - a.max(b), c < vi && c < vj)
            } else {
                (a.min(b) - c, c > vi && c > vj)
            };
            ((a - b).abs() <= p && depth >= p && depth > 0.0 && neckline_ok).then(|| s.rel(depth))
        }
        TripleTop | HeadAndShoulders => {
            let (signs, turns) = legs(s, i, j)?;
            if signs != [1, -1, 1, -1, 1, -1] {
                return None;
            }
            let (h1, l1, h2, l2, h3) = (
                s.v[turns[0]],
                s.v[turns[1]],
                s.v[turns[2]],
                s.v[turns[3]],
                s.v[turns[4]],
            );
            let low_max = l1.max(l2);
            let low_min = l1.min(l2);
            if !(s.v[i] < low_min && s.v[j] < low_min) {
                return None;
            }
            if pattern == TripleTop {
                let hmax = h1.max(h2).max(h3);
                let hmin = h1.min(h2).min(h3);
                let depth = hmin - low_max;
                (hmax - hmin <= p && depth >= p && depth > 0.0).then(|| s.rel(depth))
            } else {
                let head = h2 - h1.max(h3);
                let shoulders = h1.min(h3) - low_max;
                (head >= p && head > 0.0 && shoulders >= p && shoulders > 0.0).then(|| s.rel(head))
            }
        }
        GlobalMax | GlobalMin => {
            if m != 1 {
                return None;
            }
            let target = if pattern == GlobalMax {
                s.v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            } else {
                s.v.iter().copied().fold(f64::INFINITY, f64::min)
            };
            (s.v[i] == target).then_some(1.0)
        }
        MeanLevel => (i == 0 && j == s.len() - 1).then_some(1.0),
        EventPoint => {
            if m != 1 || i == 0 {
                return None;
            }
            let jump = s.step(i - 1).abs();
            let threshold = params.sharp_slope_factor * s.mean_abs_step;
            (jump > threshold).then(|| 1.0 - threshold / jump)
        }
    }
}

/// Score of `pattern` on exactly the window `start_row..=end_row`, or `None`
/// when the predicate does not hold. Window endpoints must be non-null rows.
pub fn window_score(
    series: &[Option<f64>],
    pattern: PatternId,
    start_row: usize,
    end_row: usize,
    params: &DetectorParams,
) -> Option<f64> {
    let s = Series::new(series, params);
    let i = s.rows.binary_search(&start_row).ok()?;
    let j = s.rows.binary_search(&end_row).ok()?;
    score_compressed(&s, pattern, i, j, params)
}

/// True iff the pattern predicate holds on exactly the given window.
pub fn verify_span(series: &[Option<f64>], pattern: PatternId, span: &Span, params: &DetectorParams) -> bool {
    window_score(series, pattern, span.start_row, span.end_row, params).is_some()
}

/// Maximal runs `[i, j]` (compressed indices) where every step has the given sign.
fn monotone_runs(s: &Series, positive: bool) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for k in 0..s.len().saturating_sub(1) {
        let ok = if positive { s.step(k) > 0.0 } else { s.step(k) < 0.0 };
        match (ok, start) {
            (true, None) => start = Some(k),
            (false, Some(st)) => {
                runs.push((st, k));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        runs.push((st, s.len() - 1));
    }
    runs
}

/// Maximal candidate windows inside one run, given a predicate that is not
/// closed under sub-windows. For each start the longest candidate is kept
/// unless an earlier start reaches at least as far.
fn maximal_in_run(
    s: &Series,
    pattern: PatternId,
    run: (usize, usize),
    params: &DetectorParams,
    out: &mut Vec<(usize, usize, f64)>,
) {
    let (lo, hi) = run;
    let mut reach_before: Option<usize> = None;
    for a in lo..=hi {
        let best = (a..=hi)
            .rev()
            .find_map(|b| score_compressed(s, pattern, a, b, params).map(|sc| (b, sc)));
        if let Some((b, sc)) = best {
            if reach_before.is_none_or(|r| r < b) {
                out.push((a, b, sc));
            }
            reach_before = Some(reach_before.map_or(b, |r| r.max(b)));
        }
    }
}

/// Maximal monotone legs as (start, end, sign) over compressed indices.
fn leg_list(s: &Series) -> Vec<(usize, usize, i8)> {
    let mut legs: Vec<(usize, usize, i8)> = Vec::new();
    for k in 0..s.len().saturating_sub(1) {
        let d = s.step(k);
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        match legs.last_mut() {
            Some(last) if last.2 == sign && last.1 == k => last.1 = k + 1,
            _ => legs.push((k, k + 1, sign)),
        }
    }
    legs
}

fn candidates(s: &Series, pattern: PatternId, params: &DetectorParams) -> Vec<(usize, usize, f64)> {
    use PatternId::*;
    let n = s.len();
    let mut out = Vec::new();
    let push_if = |i: usize, j: usize, out: &mut Vec<(usize, usize, f64)>| {
        if let Some(sc) = score_compressed(s, pattern, i, j, params) {
            out.push((i, j, sc));
        }
    };
    match pattern {
        MonotoneRise | MonotoneDecline => {
            for (i, j) in monotone_runs(s, pattern == MonotoneRise) {
                push_if(i, j, &mut out);
            }
        }
        SteadyRise | SteadyDecline | SharpIncrease | SharpDecrease => {
            let up = matches!(pattern, SteadyRise | SharpIncrease);
            for run in monotone_runs(s, up) {
                maximal_in_run(s, pattern, run, params, &mut out);
            }
        }
        Fluctuation => {
            // Maximal runs of alternating, sufficiently large steps.
            let ok = |k: usize| {
                let d = s.step(k);
                d != 0.0 && d.abs() >= s.prominence
            };
            let mut k = 0;
            while k + 1 < n {
                if !ok(k) {
                    k += 1;
                    continue;
                }
                let start = k;
                while k + 1 < n - 1 && ok(k + 1) && (s.step(k + 1) > 0.0) != (s.step(k) > 0.0) {
                    k += 1;
                }
                push_if(start, k + 1, &mut out);
                k += 1;
            }
        }
        Peak | Trough | DoubleBottom | DoubleTop | TripleTop | HeadAndShoulders => {
            let legs = leg_list(s);
            let expected: &[i8] = match pattern {
                Peak => &[1, -1],
                Trough => &[-1, 1],
                DoubleBottom => &[-1, 1, -1, 1],
                DoubleTop => &[1, -1, 1, -1],
                _ => &[1, -1, 1, -1, 1, -1],
            };
            for w in legs.windows(expected.len()) {
                if w.iter().zip(expected).all(|(leg, sign)| leg.2 == *sign) {
                    push_if(w[0].0, w[w.len() - 1].1, &mut out);
                }
            }
        }
        GlobalMax | GlobalMin | EventPoint => {
            for k in 0..n {
                push_if(k, k, &mut out);
            }
        }
        MeanLevel => push_if(0, n - 1, &mut out),
    }
    out
}

/// Greedy non-overlapping selection, best score first, ties to the earliest start.
pub(crate) fn select_non_overlapping(mut cands: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    cands.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
            .then(b.1.cmp(&a.1))
    });
    let mut chosen: Vec<(usize, usize, f64)> = Vec::new();
    for c in cands {
        if chosen.iter().all(|k| c.1 <= k.0 || k.1 <= c.0) {
            chosen.push(c);
        }
    }
    chosen
}

/// All maximal non-overlapping spans where `pattern` holds, best score first.
pub fn detect_pattern(series: &[Option<f64>], pattern: PatternId, params: &DetectorParams) -> Result<Vec<Span>, DetectError> {
    if !params.is_valid() {
        return Err(DetectError::InvalidParams);
    }
    let s = Series::new(series, params);
    let needed = min_points(pattern, params);
    if s.len() < needed {
        return Err(DetectError::SeriesTooShort {
            pattern,
            needed,
            got: s.len(),
        });
    }
    let chosen = select_non_overlapping(candidates(&s, pattern, params));
    Ok(chosen
        .into_iter()
        .map(|(i, j, score)| Span {
            start_row: s.rows[i],
            end_row: s.rows[j],
            score,
        })
        .collect())
}

/// The value of a summary statistic and every 1-based row attaining it
/// (no rows for `mean_level`).
pub fn summary_statistic(series: &[Option<f64>], pattern: PatternId) -> Result<(f64, Vec<usize>), DetectError> {
    let points: Vec<(usize, f64)> = series
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.filter(|x| x.is_finite()).map(|x| (i + 1, x)))
        .collect();
    if points.is_empty() {
        return Err(DetectError::EmptySeries);
    }
    match pattern {
        PatternId::GlobalMax | PatternId::GlobalMin => {
            let value = if pattern == PatternId::GlobalMax {
                points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
            } else {
                points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
            };
            let rows = points.iter().filter(|p| p.1 == value).map(|p| p.0).collect();
            Ok((value, rows))
        }
        PatternId::MeanLevel => Ok((points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64, vec![])),
        other => Err(DetectError::NotASummary(other)),
    }
}
