//! Text normalization shared by voting, grading, and class matching.

/// Normalize a free-text answer: lowercase, trim, collapse internal
/// whitespace, strip terminal punctuation. Without this, "No." and "no"
/// would split a vote.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_end_matches(['.', ',', '!', '?', ';', ':'])
        .trim()
        .to_string()
}

/// Normalize a class name: lowercase, trim, collapse internal whitespace.
/// Matching is exact on the normalized form; no substring matching, so
/// "road" never matches "railroad".
pub fn normalize_class(name: &str) -> String {
    name.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercased alphanumeric tokens, in order, duplicates preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
