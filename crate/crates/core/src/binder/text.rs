//! Tokenization helpers: stemming, sentence and clause boundaries.

pub(crate) use crate::trend::word_tokens;

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "on", "at", "to", "for", "and", "or", "by", "with", "from", "as", "is", "are",
    "was", "were", "be", "been", "its", "their", "this", "that", "these", "those", "per", "than", "it", "into",
];

pub(crate) fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token)
}

/// Crude suffix stripper; only needs to conflate inflections of column-name words.
pub(crate) fn stem(token: &str) -> String {
    let mut t = token.trim_matches('\'').to_lowercase();
    if let Some(base) = t.strip_suffix("'s") {
        t = base.to_string();
    }
    if t.len() > 4 {
        if let Some(base) = t.strip_suffix("ies") {
            t = format!("{base}y");
        } else if t.ends_with("sses") || t.ends_with("shes") || t.ends_with("ches") || t.ends_with("xes") {
            t.truncate(t.len() - 2);
        } else if t.ends_with('s') && !t.ends_with("ss") && !t.ends_with("us") && !t.ends_with("is") {
            t.pop();
        }
    } else if t.len() > 3 && t.ends_with('s') && !t.ends_with("ss") {
        t.pop();
    }
    for (suffix, repl) in [("ations", "at"), ("ation", "at"), ("ated", "at"), ("ing", ""), ("ed", "")] {
        if t.len() >= suffix.len() + 3 {
            if let Some(base) = t.strip_suffix(suffix) {
                t = format!("{base}{repl}");
                break;
            }
        }
    }
    if t.len() > 4 && t.ends_with('e') {
        t.pop();
    }
    t
}

/// Content tokens (stopwords removed) with byte ranges and stems.
pub(crate) fn content_tokens(text: &str) -> Vec<(usize, usize, String)> {
    word_tokens(text)
        .into_iter()
        .filter(|t| !is_stopword(&t.2))
        .map(|(s, e, w)| (s, e, stem(&w)))
        .collect()
}

const ABBREVIATIONS: &[&str] = &["e.g", "i.e", "etc", "vs", "mr", "mrs", "dr", "inc", "co", "corp", "ltd", "u.s", "no"];

/// Sentence byte ranges. Each range includes the whitespace that follows the
/// sentence, so concatenating all ranges reproduces `text`.
pub(crate) fn sentence_ranges(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            // Swallow closing quotes/brackets and repeated terminators.
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '"' | '\'' | ')' | '\u{201d}' | '\u{2019}') {
                j += 1;
            }
            let at_end = j >= chars.len();
            let followed_by_space = !at_end && chars[j].1.is_whitespace();
            let decimal_point = c == '.'
                && i > 0
                && chars[i - 1].1.is_ascii_digit()
                && chars.get(i + 1).is_some_and(|n| n.1.is_ascii_digit());
            let word_before: String = text[start..pos]
                .rsplit(|ch: char| ch.is_whitespace())
                .next()
                .unwrap_or("")
                .to_lowercase();
            let abbreviation = c == '.' && ABBREVIATIONS.contains(&word_before.trim_matches(|ch: char| !ch.is_alphanumeric() && ch != '.'));
            if (at_end || followed_by_space) && !decimal_point && !abbreviation {
                while j < chars.len() && chars[j].1.is_whitespace() {
                    j += 1;
                }
                let end = if j < chars.len() { chars[j].0 } else { text.len() };
                out.push((start, end));
                start = end;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if start < text.len() {
        if text[start..].trim().is_empty() {
            if let Some(last) = out.last_mut() {
                last.1 = text.len();
            } else {
                out.push((start, text.len()));
            }
        } else {
            out.push((start, text.len()));
        }
    }
    out
}

/// Clause byte ranges within a sentence, trimmed of surrounding whitespace and
/// punctuation other than a final period. Splits at `,` `;` `:` followed by a
/// space and before the connectives "then", "while", "but", "whereas".
pub(crate) fn clause_ranges(text: &str) -> Vec<(usize, usize)> {
    let mut cuts = vec![0];
    let bytes = text.as_bytes();
    for (i, c) in text.char_indices() {
        if matches!(c, ',' | ';' | ':') && bytes.get(i + 1).is_some_and(|b| b.is_ascii_whitespace()) {
            cuts.push(i + 1);
        }
    }
    for (s, _, w) in word_tokens(text) {
        if matches!(w.as_str(), "then" | "while" | "but" | "whereas") && s > 0 {
            cuts.push(s);
        }
    }
    cuts.push(text.len());
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2)
        .filter_map(|w| trim_range(text, w[0], w[1]))
        .collect()
}

fn trim_range(text: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ',' | ';' | ':')).len();
    let trimmed = slice.trim_end_matches(|c: char| c.is_whitespace() || matches!(c, ',' | ';' | ':'));
    let (s, e) = (start + lead, start + trimmed.len());
    (s < e).then_some((s, e))
}

/// The clause of `text` containing byte offset `pos`.
pub(crate) fn clause_at(text: &str, pos: usize) -> (usize, usize) {
    clause_ranges(text)
        .into_iter()
        .find(|&(s, e)| s <= pos && pos < e)
        .unwrap_or((0, text.len()))
}
