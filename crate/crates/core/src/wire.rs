//! The binding document wire format.
//!
//! ```text
//! Result:{
//!     "ObjectName": "change in real GDP",
//!     "DataName": "change in GDP",
//!     "Position": [["change in GDP", 7], ["change in GDP", 10]],
//!     "Trend": "sharp decrease",
//!     "Num": [null],
//!     "Text": "the change in real GDP suffers a sharp decrease"},
//! {
//!     ...}
//! Reason: "..."
//! ```
//!
//! Absent `Trend` is written as `"None"` and absent `Num` as `[null]`. The
//! parser is lenient: it tolerates prose around the document, single quotes,
//! bare `None`/`Null` words and stray brackets, which language models emit
//! routinely.

use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::binding::{BindingRecord, BindingResult, CellRef};
use crate::table::format_number;

/// The six record field names, in document order.
pub const FIELD_NAMES: [&str; 6] = ["ObjectName", "DataName", "Position", "Trend", "Num", "Text"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed binding response: {field}: {detail}")]
pub struct MalformedResponse {
    pub field: String,
    pub detail: String,
}

impl MalformedResponse {
    fn new(field: &str, detail: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            detail: detail.into(),
        }
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// Writes `result` in the wire format.
pub fn to_wire(result: &BindingResult) -> String {
    let mut out = String::from("Result:");
    if result.records.is_empty() {
        out.push_str("[]\n");
    }
    for (i, rec) in result.records.iter().enumerate() {
        if i > 0 {
            out.push_str(",\n");
        }
        out.push_str("{\n");
        out.push_str(&format!("    \"ObjectName\": {},\n", quote(&rec.object_name)));
        out.push_str(&format!("    \"DataName\": {},\n", quote(&rec.data_name)));
        out.push_str(&format!(
            "    \"Position\": [[{}, {}], [{}, {}]],\n",
            quote(&rec.position[0].column),
            rec.position[0].row,
            quote(&rec.position[1].column),
            rec.position[1].row
        ));
        let trend = rec.trend.as_deref().map(quote).unwrap_or_else(|| "\"None\"".to_string());
        out.push_str(&format!("    \"Trend\": {trend},\n"));
        let num = match &rec.num {
            Some(values) => values.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(", "),
            None => "null".to_string(),
        };
        out.push_str(&format!("    \"Num\": [{num}],\n"));
        out.push_str(&format!("    \"Text\": {}}}", quote(&rec.text)));
    }
    if !result.records.is_empty() {
        out.push('\n');
    }
    out.push_str(&format!("Reason: {}\n", quote(&result.reason)));
    out
}

fn pair_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"\[\s*(?:"((?:[^"\\]|\\.)*)"|'((?:[^'\\]|\\.)*)')\s*,\s*["']?(-?\d+)["']?\s*\]"#)
            .expect("static regex")
    })
}

/// A field key found outside string literals.
#[derive(Debug, Clone, Copy)]
struct Key {
    /// Index into `FIELD_NAMES`, or `None` for `Reason`.
    field: Option<usize>,
    start: usize,
    value_start: usize,
}

fn classify_key(name: &str) -> Option<Option<usize>> {
    if name.eq_ignore_ascii_case("reason") {
        return Some(None);
    }
    FIELD_NAMES.iter().position(|f| *f == name).map(Some)
}

/// Byte offset just past the closing quote of the string starting at `start`.
fn string_end(raw: &str, start: usize, single: bool) -> usize {
    let bytes = raw.as_bytes();
    let q = bytes[start];
    let mut i = start + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            c if c == q => {
                if !single {
                    return i + 1;
                }
                // An apostrophe only closes a single-quoted string when a
                // structural character follows.
                let next = raw[i + 1..].trim_start().chars().next();
                if matches!(next, None | Some(',') | Some(':') | Some('}') | Some(']')) {
                    return i + 1;
                }
                i += 1;
            }
            _ => i += 1,
        }
    }
    bytes.len()
}

fn after_colon(raw: &str, pos: usize) -> Option<usize> {
    let rest = &raw[pos..];
    let trimmed = rest.trim_start();
    let colon = pos + (rest.len() - trimmed.len());
    if !trimmed.starts_with(':') {
        return None;
    }
    let after = &raw[colon + 1..];
    Some(colon + 1 + (after.len() - after.trim_start().len()))
}

fn scan_keys(raw: &str) -> Vec<Key> {
    let bytes = raw.as_bytes();
    let mut keys = Vec::new();
    let mut prev_structural = true;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'"' || (c == b'\'' && prev_structural) {
            let end = string_end(raw, i, c == b'\'');
            let closed = end > i + 1 && bytes[end - 1] == c;
            let content = &raw[i + 1..if closed { end - 1 } else { end }];
            if let (Some(field), Some(value_start)) = (classify_key(content), after_colon(raw, end)) {
                keys.push(Key {
                    field,
                    start: i,
                    value_start,
                });
            }
            i = end;
            prev_structural = false;
            continue;
        }
        if c.is_ascii_alphabetic() && (i == 0 || !bytes[i - 1].is_ascii_alphanumeric()) {
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_alphanumeric() {
                j += 1;
            }
            if let (Some(field), Some(value_start)) = (classify_key(&raw[i..j]), after_colon(raw, j)) {
                keys.push(Key {
                    field,
                    start: i,
                    value_start,
                });
            }
            i = j;
            prev_structural = false;
            continue;
        }
        if !c.is_ascii_whitespace() {
            prev_structural = matches!(c, b'{' | b',' | b':' | b'[');
        }
        i += 1;
    }
    keys
}

/// Reads a quoted string starting at `s[0]` (the quote). Returns the
/// unescaped content; an unterminated string runs to the end of `s`.
fn read_quoted(s: &str) -> String {
    let single = s.starts_with('\'');
    let end = string_end(s, 0, single);
    let closed = end <= s.len() && end > 1 && s.as_bytes()[end - 1] == s.as_bytes()[0];
    let inner = if closed { &s[1..end - 1] } else { &s[1..] };
    let mut out = String::new();
    let mut escaped = false;
    for c in inner.chars() {
        if escaped {
            match c {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                'r' => out.push('\r'),
                other => out.push(other),
            }
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else {
            out.push(c);
        }
    }
    if closed {
        out
    } else {
        out.trim_end().to_string()
    }
}

fn read_json_string(s: &str) -> String {
    // Prefer strict JSON decoding so \uXXXX escapes round-trip.
    if s.starts_with('"') {
        let mut de = serde_json::Deserializer::from_str(s).into_iter::<String>();
        if let Some(Ok(v)) = de.next() {
            return v;
        }
    }
    read_quoted(s)
}

fn read_bare(s: &str) -> String {
    s.split([',', '}', '\n'])
        .next()
        .unwrap_or("")
        .trim()
        .to_string()
}

fn read_text_value(s: &str) -> String {
    match s.chars().next() {
        Some('"') | Some('\'') => read_json_string(s),
        _ => read_bare(s),
    }
}

fn is_null_word(s: &str) -> bool {
    matches!(s.trim().to_ascii_lowercase().as_str(), "" | "none" | "null" | "nan" | "n/a")
}

fn parse_num(s: &str) -> Result<Option<Vec<f64>>, MalformedResponse> {
    let body = if let Some(rest) = s.strip_prefix('[') {
        rest.split(']').next().unwrap_or("")
    } else {
        s.split([',', '}', '\n']).next().unwrap_or("")
    };
    let mut values = Vec::new();
    for token in body.split(',') {
        let t = token.trim().trim_matches(|c| c == '"' || c == '\'');
        if is_null_word(t) {
            continue;
        }
        let v: f64 = t
            .trim_end_matches('%')
            .parse()
            .map_err(|_| MalformedResponse::new("Num", format!("unparseable value {t:?}")))?;
        values.push(v);
    }
    Ok((!values.is_empty()).then_some(values))
}

fn parse_record(raw: &str, keys: &[Key], block_end: usize) -> Result<BindingRecord, MalformedResponse> {
    let mut values: [Option<&str>; 6] = [None; 6];
    for (k, key) in keys.iter().enumerate() {
        let Some(field) = key.field else { continue };
        if values[field].is_some() {
            continue;
        }
        let end = keys.get(k + 1).map(|n| n.start).unwrap_or(block_end);
        values[field] = Some(raw[key.value_start..end.max(key.value_start)].trim_end());
    }
    for (i, v) in values.iter().enumerate() {
        if v.is_none() {
            return Err(MalformedResponse::new(FIELD_NAMES[i], "field is missing"));
        }
    }
    let value_at = |i: usize| values[i].expect("checked above");

    let object_name = read_text_value(value_at(0));
    let data_name = read_text_value(value_at(1));

    let mut pairs = Vec::new();
    for cap in pair_re().captures_iter(value_at(2)).take(2) {
        let row: i64 = cap[3]
            .parse()
            .map_err(|_| MalformedResponse::new("Position", "unparseable row index"))?;
        if row < 0 {
            return Err(MalformedResponse::new("Position", format!("negative row index {row}")));
        }
        let column = match (cap.get(1), cap.get(2)) {
            (Some(d), _) => serde_json::from_str(&format!("\"{}\"", d.as_str())).unwrap_or_else(|_| d.as_str().to_string()),
            (_, Some(q)) => q.as_str().replace("\\'", "'"),
            _ => unreachable!("one alternative matches"),
        };
        pairs.push(CellRef::new(column, row as usize));
    }
    let position = match pairs.len() {
        0 => return Err(MalformedResponse::new("Position", "no [column, row] pair found")),
        1 => [pairs[0].clone(), pairs[0].clone()],
        _ => [pairs[0].clone(), pairs[1].clone()],
    };

    let trend_raw = read_text_value(value_at(3));
    let trend = (!is_null_word(&trend_raw)).then_some(trend_raw);
    let num = parse_num(value_at(4).trim())?;
    let text = read_text_value(value_at(5));

    Ok(BindingRecord {
        object_name,
        data_name,
        position,
        trend,
        num,
        text,
    })
}

/// Parses a (possibly prose-wrapped) binding document.
pub fn parse_wire(raw: &str) -> Result<BindingResult, MalformedResponse> {
    let keys = scan_keys(raw);
    let last_object = keys.iter().rposition(|k| k.field == Some(0));
    let reason_idx = keys
        .iter()
        .enumerate()
        .skip(last_object.unwrap_or(0))
        .find(|(_, k)| k.field.is_none())
        .map(|(i, _)| i);
    let Some(reason_idx) = reason_idx else {
        return Err(MalformedResponse::new("Reason", "no Reason section"));
    };
    let reason_key = keys[reason_idx];
    let rest = &raw[reason_key.value_start..];
    let reason = match rest.chars().next() {
        Some('"') | Some('\'') => read_json_string(rest),
        _ => rest.trim().to_string(),
    };

    let record_keys = &keys[..reason_idx];
    let starts: Vec<usize> = record_keys
        .iter()
        .enumerate()
        .filter(|(_, k)| k.field == Some(0))
        .map(|(i, _)| i)
        .collect();
    let mut records = Vec::with_capacity(starts.len());
    for (n, &s) in starts.iter().enumerate() {
        let e = starts.get(n + 1).copied().unwrap_or(record_keys.len());
        let block_end = record_keys.get(e).map(|k| k.start).unwrap_or(reason_key.start);
        records.push(parse_record(raw, &record_keys[s..e], block_end)?);
    }
    if records.is_empty() {
        let explicit_empty = raw[..reason_key.start]
            .split_once("Result")
            .map(|(_, rest)| {
                let r = rest.trim_start_matches(|c: char| c == ':' || c.is_whitespace());
                r.starts_with("[]") || r.starts_with("{}")
            })
            .unwrap_or(false);
        if !explicit_empty {
            return Err(MalformedResponse::new("ObjectName", "no record block found"));
        }
    }
    Ok(BindingResult { records, reason })
}
