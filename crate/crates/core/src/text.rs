//! Answer-string normalization shared by ROUGE-L and the exact-match oracle.

fn is_edge_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Lowercases, splits on Unicode whitespace, and strips surrounding
/// punctuation from each token. Tokens that are pure punctuation vanish.
pub(crate) fn tokenize(s: &str) -> Vec<String> {
    s.split_whitespace()
        .map(|t| t.trim_matches(is_edge_punct).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Lowercases, collapses whitespace runs, and strips leading and trailing
/// punctuation from the whole string.
pub(crate) fn normalize_answer(s: &str) -> String {
    let lower = s.to_lowercase();
    let collapsed = lower.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed.trim_matches(is_edge_punct).to_string()
}
