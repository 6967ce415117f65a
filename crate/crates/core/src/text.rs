//! Shared token-boundary rules.
//!
//! A token is a maximal run of Unicode letters and digits; every other
//! character separates tokens. Entity matching, keyword removal and
//! highlight scanning all use this definition.

/// Case-folds a term: lowercase, surrounding whitespace trimmed.
pub fn fold(term: &str) -> String {
    term.trim().to_lowercase()
}

/// Whether `c` may appear inside a token.
#[inline]
pub fn is_token_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Byte spans `(start, end)` of every token in `text`.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (is_token_char(c), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Lowercased tokens of `text`.
///
/// Lowercasing happens before splitting so that case mappings which
/// expand into non-token characters cannot leak them into a token.
pub fn tokens(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    token_spans(&lowered)
        .into_iter()
        .map(|(s, e)| lowered[s..e].to_string())
        .collect()
}
