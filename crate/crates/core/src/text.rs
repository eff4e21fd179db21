//! Text normalization and lexical similarity helpers shared by answer
//! matching, reference voting, and the rule-based evaluator.

use std::collections::BTreeSet;

/// Lowercases and collapses runs of whitespace. Used for query identity in
/// voting and reference-path deduplication.
pub fn normalize_light(s: &str) -> String {
    s.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Open-QA answer normalization: lowercase, drop punctuation, drop the
/// articles "a"/"an"/"the", collapse whitespace.
pub fn normalize_answer(s: &str) -> String {
    let lowered = s.to_lowercase();
    let depunct: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    depunct
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercased alphanumeric token set.
pub fn token_set(s: &str) -> BTreeSet<String> {
    let lowered = s.to_lowercase();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// Jaccard similarity of the token sets of two strings; 0.0 when either
/// side has no tokens.
pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let ta = token_set(a);
    let tb = token_set(b);
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let inter = ta.intersection(&tb).count();
    let union = ta.union(&tb).count();
    inter as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_normalization() {
        assert_eq!(normalize_answer("Eddie  Argos."), "eddie argos");
        assert_eq!(normalize_answer("The Black Keys"), "black keys");
        assert_eq!(normalize_answer("An  apple, a day!"), "apple day");
    }

    #[test]
    fn jaccard_basics() {
        assert!((token_jaccard("r1 of e0", "The r1 of e0 is e1") - 3.0 / 6.0).abs() < 1e-12);
        assert_eq!(token_jaccard("", "x"), 0.0);
        assert_eq!(token_jaccard("same thing", "same thing"), 1.0);
    }
}
