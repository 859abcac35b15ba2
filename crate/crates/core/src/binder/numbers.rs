//! Number mentions in narrative text and unit-aware matching against cells.
//!
//! A mention's absolute value is `number * scale` where the scale word is one
//! of trillion (1e12), billion (1e9), million (1e6), thousand (1e3). A column
//! unit naming one of those words divides back out, so "CNY 3.05 trillion"
//! equals 3050 in a "CNY Billion" column. Percentages and basis points compare
//! in percentage points (25 bps == 0.25). Matching tolerates half a unit of
//! the last digit written in the text.

use std::sync::LazyLock;

use regex::Regex;

use crate::table::ColumnMeta;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MentionUnit {
    Plain,
    Percent,
    BasisPoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumberMention {
    /// Byte range of the whole mention, currency and scale word included.
    pub start: usize,
    pub end: usize,
    /// The number as written, before scaling.
    pub number: f64,
    /// Half a unit of the last written digit, before scaling.
    pub half_ulp: f64,
    pub scale: f64,
    pub unit: MentionUnit,
    pub currency: bool,
    pub spelled: bool,
}

impl NumberMention {
    /// A bare four-digit integer in 1800..=2100 reads as a year.
    pub fn is_year(&self) -> bool {
        self.unit == MentionUnit::Plain
            && self.scale == 1.0
            && !self.currency
            && !self.spelled
            && self.half_ulp == 0.5
            && self.number.fract() == 0.0
            && (1800.0..=2100.0).contains(&self.number)
    }

    /// True if the mention denotes `cell` in a column with the given metadata.
    pub fn matches_cell(&self, cell: f64, column: &ColumnMeta) -> bool {
        self.candidate_values(column)
            .iter()
            .any(|(v, tol)| (cell - v).abs() <= tol * (1.0 + 1e-9) + 1e-12)
    }

    /// (value, tolerance) pairs in the column's units.
    fn candidate_values(&self, column: &ColumnMeta) -> Vec<(f64, f64)> {
        let unit = column.unit.as_deref().unwrap_or("").to_lowercase();
        let col_scale = unit_scale(&unit);
        let col_is_pct = unit.contains('%') || unit.contains("percent");
        let col_is_bps = unit.contains("bps") || unit.contains("basis point");
        let (n, h) = (self.number, self.half_ulp);
        match self.unit {
            MentionUnit::Percent => {
                let mut out = vec![(n, h)];
                if col_is_bps {
                    out = vec![(n * 100.0, h * 100.0)];
                } else if !col_is_pct {
                    out.push((n / 100.0, h / 100.0));
                }
                out
            }
            MentionUnit::BasisPoints => {
                if col_is_bps {
                    vec![(n, h)]
                } else {
                    vec![(n / 100.0, h / 100.0)]
                }
            }
            MentionUnit::Plain => {
                if self.scale != 1.0 {
                    let f = self.scale / col_scale;
                    vec![(n * f, h * f)]
                } else {
                    vec![(n, h)]
                }
            }
        }
    }
}

/// Scale factor named by a unit string ("CNY Billion" -> 1e9), 1 if none.
pub fn unit_scale(unit: &str) -> f64 {
    let lower = unit.to_lowercase();
    for token in lower.split(|c: char| !c.is_alphanumeric()) {
        if let Some(s) = scale_word(token) {
            return s;
        }
    }
    1.0
}

fn scale_word(w: &str) -> Option<f64> {
    Some(match w {
        "trillion" | "trillions" | "tn" | "trn" => 1e12,
        "billion" | "billions" | "bn" | "bln" => 1e9,
        "million" | "millions" | "mn" | "mln" | "m" => 1e6,
        "thousand" | "thousands" | "k" => 1e3,
        _ => return None,
    })
}

fn number_word(w: &str) -> Option<f64> {
    const WORDS: [&str; 19] = [
        "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve", "thirteen",
        "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
    ];
    WORDS.iter().position(|x| *x == w).map(|i| (i + 2) as f64)
}

static NUMBER_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?xi)
        (?P<cur>(?:US\$|HK\$|\$|€|£|¥|(?:CNY|RMB|USD|EUR|GBP|JPY|HKD)\s?))?
        (?P<neg>-)?
        (?P<num>\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?)
        (?:
            \s?(?P<pct>%|percent\b|per\ cent\b)
          | \s?(?P<bps>bps\b|bp\b|basis\ points?\b)
          | \s?(?P<scale>trillion\b|billion\b|million\b|thousand\b|tn\b|trn\b|bn\b|bln\b|mn\b|mln\b|k\b)
        )?",
    )
    .expect("number pattern")
});

/// Every numeric mention in `text`, in order.
pub fn extract_numbers(text: &str) -> Vec<NumberMention> {
    let mut out = Vec::new();
    for caps in NUMBER_RE.captures_iter(text) {
        let whole = caps.get(0).expect("match");
        let num = caps.name("num").expect("number group");
        let negative = caps.name("neg").is_some()
            && caps.name("cur").is_none()
            && !text[..whole.start()].ends_with(|c: char| c.is_ascii_digit());
        // A hyphen between two numbers is a range, not a sign.
        let lead = if caps.name("neg").is_some() && !negative && caps.name("cur").is_none() {
            num.start()
        } else {
            whole.start()
        };
        // Reject digits glued to a preceding word or number ("Q4", "3.5.1").
        let before = text[..lead].chars().next_back();
        if before.is_some_and(|c| c.is_alphanumeric() || c == '.' || c == '_') {
            continue;
        }
        let after = text[whole.end()..].chars().next();
        if caps.name("pct").is_none()
            && caps.name("bps").is_none()
            && caps.name("scale").is_none()
            && after.is_some_and(|c| c.is_alphabetic())
        {
            // "2nd", "3x", "10yr": ordinals and glued units are not values.
            continue;
        }
        let raw: String = num.as_str().chars().filter(|c| *c != ',').collect();
        let Ok(mut number) = raw.parse::<f64>() else { continue };
        if negative {
            number = -number;
        }
        let decimals = raw.split('.').nth(1).map_or(0, str::len);
        let half_ulp = 0.5 * 10f64.powi(-(decimals as i32));
        let (unit, scale) = if caps.name("pct").is_some() {
            (MentionUnit::Percent, 1.0)
        } else if caps.name("bps").is_some() {
            (MentionUnit::BasisPoints, 1.0)
        } else if let Some(s) = caps.name("scale") {
            (MentionUnit::Plain, scale_word(&s.as_str().to_lowercase()).unwrap_or(1.0))
        } else {
            (MentionUnit::Plain, 1.0)
        };
        let start = if negative { num.start() - 1 } else { lead };
        out.push(NumberMention {
            start,
            end: whole.end(),
            number,
            half_ulp,
            scale,
            unit,
            currency: caps.name("cur").is_some(),
            spelled: false,
        });
    }
    out.extend(spelled_numbers(text));
    out.sort_by_key(|m| m.start);
    out
}

fn spelled_numbers(text: &str) -> Vec<NumberMention> {
    let tokens = crate::trend::word_tokens(text);
    let mut out = Vec::new();
    for (i, (s, e, w)) in tokens.iter().enumerate() {
        let Some(n) = number_word(w) else { continue };
        let (end, scale) = match tokens.get(i + 1) {
            Some((gap_start, se, sw)) if text[*e..*gap_start].trim().is_empty() => match scale_word(sw) {
                Some(sc) if sw.len() > 2 => (*se, sc),
                _ => (*e, 1.0),
            },
            _ => (*e, 1.0),
        };
        out.push(NumberMention {
            start: *s,
            end,
            number: n,
            half_ulp: 0.5,
            scale,
            unit: MentionUnit::Plain,
            currency: false,
            spelled: true,
        });
    }
    out
}
