//! Shared tokenization helpers.
//!
//! One tokenizer feeds every text metric and the masking code so that "word"
//! means the same thing everywhere: maximal alphanumeric runs, plus lone
//! symbol characters (emoji, box glyphs) that are neither whitespace nor ASCII
//! punctuation. ASCII punctuation never forms a token.

/// Byte spans of tokens in `text`, in order.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(i);
            }
        } else {
            if let Some(s) = run_start.take() {
                spans.push((s, i));
            }
            if !ch.is_whitespace() && !ch.is_ascii() {
                // Symbol characters such as emoji stand alone as tokens.
                spans.push((i, i + ch.len_utf8()));
            }
        }
    }
    if let Some(s) = run_start {
        spans.push((s, text.len()));
    }
    spans
}

/// Tokens of `text` as string slices, case preserved.
pub fn tokens(text: &str) -> Vec<&str> {
    token_spans(text).into_iter().map(|(s, e)| &text[s..e]).collect()
}

/// Case-folded tokens.
pub fn folded_tokens(text: &str) -> Vec<String> {
    tokens(text).into_iter().map(|t| t.to_lowercase()).collect()
}

/// Sentence segments split on `.`, `!`, `?`, `;` and newlines; empty segments
/// are dropped.
pub fn sentences(text: &str) -> Vec<&str> {
    text.split(['.', '!', '?', ';', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Byte spans of whitespace-separated chunks, used where "token" must mean
/// "thing a reader sees between spaces" (output obfuscation).
pub fn whitespace_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                spans.push((s, i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// FNV-1a 64-bit hash; used where a stable, process-independent hash is
/// needed (deterministic ids, seed derivation).
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Lowercases and collapses every whitespace run to one space.
pub fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation_and_whitespace() {
        assert_eq!(tokens("the cat, sat."), vec!["the", "cat", "sat"]);
        assert_eq!(tokens("  "), Vec::<&str>::new());
        assert_eq!(tokens("a-b_c"), vec!["a", "b", "c"]);
    }

    #[test]
    fn keeps_symbol_characters_as_tokens() {
        assert_eq!(tokens("deal ✨ now"), vec!["deal", "✨", "now"]);
        assert_eq!(tokens("x █ y"), vec!["x", "█", "y"]);
        // ASCII punctuation is never a token, so mask placeholders vanish
        // from token streams.
        assert_eq!(tokens("write about {} today"), vec!["write", "about", "today"]);
    }

    #[test]
    fn spans_cover_exact_bytes() {
        let text = "Hi, there";
        for (s, e) in token_spans(text) {
            assert!(text.is_char_boundary(s) && text.is_char_boundary(e));
        }
        assert_eq!(tokens(text), vec!["Hi", "there"]);
    }

    #[test]
    fn sentence_split_drops_empties() {
        assert_eq!(sentences("One. Two!  \n\nThree?"), vec!["One", "Two", "Three"]);
        assert_eq!(sentences(""), Vec::<&str>::new());
    }

    #[test]
    fn whitespace_spans_roundtrip() {
        let text = " a  bb\tccc ";
        let spans = whitespace_spans(text);
        let words: Vec<&str> = spans.iter().map(|&(s, e)| &text[s..e]).collect();
        assert_eq!(words, vec!["a", "bb", "ccc"]);
    }

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), fnv1a(b"a"));
        assert_ne!(fnv1a(b"a"), fnv1a(b"b"));
    }

    #[test]
    fn normalize_collapses_case_and_space() {
        assert_eq!(normalize_ws("  A \t B\nc  "), "a b c");
    }
}
