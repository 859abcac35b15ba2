//! Trend vocabulary: the lexicon mapping surface phrases to named patterns,
//! and detectors locating each pattern in a numeric series.

mod detect;

pub use detect::{
    detect_pattern, min_points, summary_statistic, verify_span, window_score, DetectError, DetectorParams, Span,
};

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternId {
    MonotoneRise,
    MonotoneDecline,
    SteadyRise,
    SteadyDecline,
    SharpIncrease,
    SharpDecrease,
    Fluctuation,
    Peak,
    Trough,
    DoubleBottom,
    DoubleTop,
    TripleTop,
    HeadAndShoulders,
    GlobalMax,
    GlobalMin,
    MeanLevel,
    EventPoint,
}

impl PatternId {
    pub const ALL: [PatternId; 17] = [
        PatternId::MonotoneRise,
        PatternId::MonotoneDecline,
        PatternId::SteadyRise,
        PatternId::SteadyDecline,
        PatternId::SharpIncrease,
        PatternId::SharpDecrease,
        PatternId::Fluctuation,
        PatternId::Peak,
        PatternId::Trough,
        PatternId::DoubleBottom,
        PatternId::DoubleTop,
        PatternId::TripleTop,
        PatternId::HeadAndShoulders,
        PatternId::GlobalMax,
        PatternId::GlobalMin,
        PatternId::MeanLevel,
        PatternId::EventPoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternId::MonotoneRise => "monotone_rise",
            PatternId::MonotoneDecline => "monotone_decline",
            PatternId::SteadyRise => "steady_rise",
            PatternId::SteadyDecline => "steady_decline",
            PatternId::SharpIncrease => "sharp_increase",
            PatternId::SharpDecrease => "sharp_decrease",
            PatternId::Fluctuation => "fluctuation",
            PatternId::Peak => "peak",
            PatternId::Trough => "trough",
            PatternId::DoubleBottom => "double_bottom",
            PatternId::DoubleTop => "double_top",
            PatternId::TripleTop => "triple_top",
            PatternId::HeadAndShoulders => "head_and_shoulders",
            PatternId::GlobalMax => "global_max",
            PatternId::GlobalMin => "global_min",
            PatternId::MeanLevel => "mean_level",
            PatternId::EventPoint => "event_point",
        }
    }

    /// The kind a pattern has in the shipped lexicon.
    pub fn default_kind(self) -> TrendKind {
        match self {
            PatternId::GlobalMax | PatternId::GlobalMin | PatternId::MeanLevel => TrendKind::SummaryIndicator,
            PatternId::EventPoint => TrendKind::SpecialEvent,
            _ => TrendKind::ChangePattern,
        }
    }

    /// Shape patterns are defined on relative geometry of the series.
    pub fn is_shape(self) -> bool {
        !matches!(
            self,
            PatternId::GlobalMax | PatternId::GlobalMin | PatternId::MeanLevel | PatternId::EventPoint
        )
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PatternId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown trend pattern {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendKind {
    ChangePattern,
    SummaryIndicator,
    SpecialEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPattern {
    pub id: PatternId,
    pub kind: TrendKind,
    pub aliases: Vec<String>,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed lexicon: {0}")]
    Json(#[from] serde_json::Error),
    #[error("lexicon is empty")]
    Empty,
    #[error("alias {alias:?} maps to both {first} and {second}")]
    DuplicateAlias {
        alias: String,
        first: PatternId,
        second: PatternId,
    },
}

#[derive(Debug, Deserialize, Serialize)]
struct LexiconFile {
    patterns: Vec<TrendPattern>,
}

/// A validated alias table: every normalized alias maps to exactly one pattern.
#[derive(Debug, Clone)]
pub struct Lexicon {
    patterns: Vec<TrendPattern>,
    /// (alias tokens, pattern, kind), longest alias first.
    entries: Vec<(Vec<String>, PatternId, TrendKind)>,
}

const DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.json");

/// Splits text into lowercase word tokens with their byte ranges. Hyphens,
/// underscores and whitespace all separate tokens.
pub(crate) fn word_tokens(text: &str) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        let is_word = c.is_alphanumeric() || c == '\'';
        match (is_word, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i, text[s..i].to_lowercase()));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, text.len(), text[s..].to_lowercase()));
    }
    for t in &mut out {
        let trimmed = t.2.trim_matches('\'');
        if trimmed.len() != t.2.len() {
            t.2 = trimmed.to_string();
        }
    }
    out.retain(|t| !t.2.is_empty());
    out
}

/// A trend phrase found in text.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendMatch {
    /// Byte offsets into the searched text.
    pub start: usize,
    pub end: usize,
    pub pattern: PatternId,
    pub kind: TrendKind,
}

impl Lexicon {
    pub fn new(patterns: Vec<TrendPattern>) -> Result<Self, LexiconError> {
        if patterns.is_empty() {
            return Err(LexiconError::Empty);
        }
        let mut seen: HashMap<Vec<String>, PatternId> = HashMap::new();
        let mut entries = Vec::new();
        for p in &patterns {
            for alias in &p.aliases {
                let tokens: Vec<String> = word_tokens(alias).into_iter().map(|t| t.2).collect();
                if tokens.is_empty() {
                    continue;
                }
                match seen.get(&tokens) {
                    Some(first) if *first != p.id => {
                        return Err(LexiconError::DuplicateAlias {
                            alias: alias.clone(),
                            first: *first,
                            second: p.id,
                        })
                    }
                    Some(_) => continue,
                    None => {
                        seen.insert(tokens.clone(), p.id);
                        entries.push((tokens, p.id, p.kind));
                    }
                }
            }
        }
        entries.sort_by(|a, b| {
            b.0.len()
                .cmp(&a.0.len())
                .then_with(|| b.0.concat().len().cmp(&a.0.concat().len()))
                .then_with(|| a.0.cmp(&b.0))
        });
        Ok(Self { patterns, entries })
    }

    pub fn from_json_str(text: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile = serde_json::from_str(text)?;
        Self::new(file.patterns)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn patterns(&self) -> &[TrendPattern] {
        &self.patterns
    }

    pub fn kind_of(&self, id: PatternId) -> TrendKind {
        self.patterns
            .iter()
            .find(|p| p.id == id)
            .map(|p| p.kind)
            .unwrap_or_else(|| id.default_kind())
    }

    /// All non-overlapping alias occurrences in `text`, scanning left to
    /// right and preferring the longest alias at each position.
    pub fn find_phrases(&self, text: &str) -> Vec<TrendMatch> {
        let tokens = word_tokens(text);
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let hit = self.entries.iter().find(|(alias, _, _)| {
                i + alias.len() <= tokens.len() && alias.iter().zip(&tokens[i..]).all(|(a, t)| *a == t.2)
            });
            match hit {
                Some((alias, id, kind)) => {
                    out.push(TrendMatch {
                        start: tokens[i].0,
                        end: tokens[i + alias.len() - 1].1,
                        pattern: *id,
                        kind: *kind,
                    });
                    i += alias.len();
                }
                None => i += 1,
            }
        }
        out
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::from_json_str(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }
}

/// Maps a phrase to its trend pattern. Matching ignores case, hyphens and
/// spacing; the longest alias found in the phrase wins.
pub fn classify_trend(phrase: &str, lexicon: &Lexicon) -> Option<(PatternId, TrendKind)> {
    lexicon
        .find_phrases(phrase)
        .into_iter()
        .max_by(|a, b| (a.end - a.start).cmp(&(b.end - b.start)).then(b.start.cmp(&a.start)))
        .map(|m| (m.pattern, m.kind))
}
