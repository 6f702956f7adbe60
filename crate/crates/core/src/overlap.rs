//! Feature-set comparison and three-level answer grading.
//!
//! Quantifies the three-way comparison between what humans said they looked
//! at and what each pipeline variant consumed, and grades model answers
//! against the consensus with a mechanical, auditable rule in place of
//! by-eye judgment.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::text::{normalize_answer, tokenize};

const BUILTIN_SYNONYMS: &str = include_str!("../data/synonyms.txt");

/// Jaccard index `|a n b| / |a u b|`.
///
/// Both-empty is defined as 1.0: two observers that each saw nothing
/// relevant agree. The filter's empty-batch case can produce exactly that.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let intersection = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    intersection / union
}

fn precision_recall(model: &BTreeSet<String>, human: &BTreeSet<String>) -> (f64, f64) {
    let hit = model.intersection(human).count() as f64;
    let precision = if model.is_empty() {
        1.0
    } else {
        hit / model.len() as f64
    };
    let recall = if human.is_empty() {
        1.0
    } else {
        hit / human.len() as f64
    };
    (precision, recall)
}

/// Overlap scores of both model feature sets against the human set for one
/// question. Class names are expected normalized (lowercase, trimmed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureComparison {
    pub question_id: String,
    pub human_features: BTreeSet<String>,
    pub pretrained_features: BTreeSet<String>,
    pub filtered_features: BTreeSet<String>,
    pub jaccard_pretrained: f64,
    pub jaccard_filtered: f64,
    pub precision_pretrained: f64,
    pub recall_pretrained: f64,
    pub precision_filtered: f64,
    pub recall_filtered: f64,
}

/// Fill every overlap score for one question's three feature sets.
pub fn compare_features(
    question_id: impl Into<String>,
    human: BTreeSet<String>,
    pretrained: BTreeSet<String>,
    filtered: BTreeSet<String>,
) -> FeatureComparison {
    let (precision_pretrained, recall_pretrained) = precision_recall(&pretrained, &human);
    let (precision_filtered, recall_filtered) = precision_recall(&filtered, &human);
    FeatureComparison {
        question_id: question_id.into(),
        jaccard_pretrained: jaccard(&pretrained, &human),
        jaccard_filtered: jaccard(&filtered, &human),
        precision_pretrained,
        recall_pretrained,
        precision_filtered,
        recall_filtered,
        human_features: human,
        pretrained_features: pretrained,
        filtered_features: filtered,
    }
}

/// Three-level correctness code for an answer, ordered
/// `Wrong < PartiallyCorrect < Correct`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectnessGrade {
    Wrong,
    PartiallyCorrect,
    Correct,
}

impl CorrectnessGrade {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorrectnessGrade::Wrong => "wrong",
            CorrectnessGrade::PartiallyCorrect => "partially_correct",
            CorrectnessGrade::Correct => "correct",
        }
    }
}

/// An equivalence table of terms, loaded from `term = term` lines.
#[derive(Debug, Clone, Default)]
pub struct SynonymTable {
    canonical: HashMap<String, String>,
}

impl SynonymTable {
    /// Parse table text: one `term = term` pair per line, `#` comments.
    /// Both sides map to the right-hand term; chains resolve transitively.
    pub fn parse(text: &str) -> Result<Self, CoreError> {
        let mut canonical = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((left, right)) = line.split_once('=') else {
                return Err(CoreError::parse(
                    "synonyms",
                    i + 1,
                    format!("expected `term = term`, got `{line}`"),
                ));
            };
            let left = normalize_answer(left);
            let right = normalize_answer(right);
            if left.is_empty() || right.is_empty() {
                return Err(CoreError::parse("synonyms", i + 1, "empty term"));
            }
            canonical.insert(left, right);
        }
        Ok(Self { canonical })
    }

    /// The table shipped with the crate (vehicle = car and friends).
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_SYNONYMS).expect("built-in synonym table parses")
    }

    pub fn load(path: &Path) -> Result<Self, CoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }

    /// Resolve a term through the table, following chains, with a hop cap
    /// to guard against cycles.
    pub fn resolve<'a>(&'a self, term: &'a str) -> &'a str {
        let mut current = term;
        for _ in 0..self.canonical.len() {
            match self.canonical.get(current) {
                Some(next) if next != current => current = next,
                _ => break,
            }
        }
        current
    }

    /// Canonical form of an answer: the whole phrase resolved first, then
    /// each token, rejoined. A token is left alone when its resolution
    /// contains the token itself ("sign" -> "traffic sign"), otherwise the
    /// canonical phrase would never be a fixed point.
    pub fn canonicalize(&self, answer: &str) -> String {
        let normalized = normalize_answer(answer);
        let whole = self.resolve(&normalized);
        if whole != normalized {
            return whole.to_string();
        }
        normalized
            .split_whitespace()
            .map(|t| {
                let resolved = self.resolve(t);
                if resolved != t && resolved.split_whitespace().any(|rt| rt == t) {
                    t
                } else {
                    resolved
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Token-overlap F1 over token multisets.
fn token_f1(a: &str, b: &str) -> f64 {
    let count = |s: &str| {
        let mut m: HashMap<String, usize> = HashMap::new();
        for t in tokenize(s) {
            *m.entry(t).or_insert(0) += 1;
        }
        m
    };
    let ca = count(a);
    let cb = count(b);
    let total_a: usize = ca.values().sum();
    let total_b: usize = cb.values().sum();
    if total_a == 0 || total_b == 0 {
        return 0.0;
    }
    let overlap: usize = ca
        .iter()
        .map(|(t, &n)| n.min(cb.get(t).copied().unwrap_or(0)))
        .sum();
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / total_a as f64;
    let recall = overlap as f64 / total_b as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Grade a model answer against the consensus.
///
/// Correct on normalized or synonym-canonical equality; partially correct
/// when token-overlap F1 reaches 0.5 without a full match; wrong otherwise.
pub fn grade_answer(
    model_answer: &str,
    consensus_answer: &str,
    synonyms: &SynonymTable,
) -> CorrectnessGrade {
    let m = normalize_answer(model_answer);
    let c = normalize_answer(consensus_answer);
    if m == c {
        return CorrectnessGrade::Correct;
    }
    let cm = synonyms.canonicalize(&m);
    let cc = synonyms.canonicalize(&c);
    if cm == cc {
        return CorrectnessGrade::Correct;
    }
    if token_f1(&cm, &cc) >= 0.5 {
        CorrectnessGrade::PartiallyCorrect
    } else {
        CorrectnessGrade::Wrong
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn jaccard_basics() {
        let a = set(&["road", "car"]);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &set(&["tree", "sky"])), 0.0);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 1.0);
        assert_eq!(jaccard(&a, &set(&[])), 0.0);
    }

    #[test]
    fn jaccard_hand_count() {
        let a = set(&["road", "car", "sign"]);
        let b = set(&["road", "car", "tree", "sky"]);
        assert!((jaccard(&a, &b) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn compare_identical_sets_is_perfect() {
        let human = set(&["road", "car"]);
        let cmp = compare_features("q1", human.clone(), set(&["tree"]), human.clone());
        assert_eq!(cmp.jaccard_filtered, 1.0);
        assert_eq!(cmp.precision_filtered, 1.0);
        assert_eq!(cmp.recall_filtered, 1.0);
    }

    #[test]
    fn superset_with_irrelevant_extras_keeps_recall() {
        // The unfiltered model saw everything the human did plus clutter.
        let human = set(&["road", "car"]);
        let pretrained = set(&["road", "car", "tree", "sky"]);
        let cmp = compare_features("q1", human, pretrained, set(&["road", "car"]));
        assert_eq!(cmp.recall_pretrained, 1.0);
        assert!(cmp.precision_pretrained < 1.0);
        assert!((cmp.precision_pretrained - 0.5).abs() < 1e-12);
    }

    #[test]
    fn compare_matches_set_arithmetic_oracle() {
        // Independent check with plain set operations on random-ish sets.
        let universe = [
            "road", "car", "sign", "tree", "sky", "person", "curb", "bus",
        ];
        for salt in 0u64..20 {
            let pick = |tag: u64| -> BTreeSet<String> {
                universe
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| {
                        (salt.wrapping_mul(31).wrapping_add(tag * 7 + *i as u64)) % 3 != 0
                    })
                    .map(|(_, s)| s.to_string())
                    .take(5)
                    .collect()
            };
            let (h, p, f) = (pick(0), pick(1), pick(2));
            let cmp = compare_features("q", h.clone(), p.clone(), f.clone());

            let inter_p = p.intersection(&h).count() as f64;
            let union_p = p.union(&h).count() as f64;
            let expect_jp = if union_p == 0.0 {
                1.0
            } else {
                inter_p / union_p
            };
            assert_eq!(cmp.jaccard_pretrained, expect_jp);
            let inter_f = f.intersection(&h).count() as f64;
            let union_f = f.union(&h).count() as f64;
            let expect_jf = if union_f == 0.0 {
                1.0
            } else {
                inter_f / union_f
            };
            assert_eq!(cmp.jaccard_filtered, expect_jf);

            let expect_prec = if p.is_empty() {
                1.0
            } else {
                inter_p / p.len() as f64
            };
            let expect_rec = if h.is_empty() {
                1.0
            } else {
                inter_p / h.len() as f64
            };
            assert_eq!(cmp.precision_pretrained, expect_prec);
            assert_eq!(cmp.recall_pretrained, expect_rec);
            let expect_prec = if f.is_empty() {
                1.0
            } else {
                inter_f / f.len() as f64
            };
            let expect_rec = if h.is_empty() {
                1.0
            } else {
                inter_f / h.len() as f64
            };
            assert_eq!(cmp.precision_filtered, expect_prec);
            assert_eq!(cmp.recall_filtered, expect_rec);
        }
    }

    #[test]
    fn grade_exact_and_disjoint() {
        let syn = SynonymTable::builtin();
        assert_eq!(grade_answer("no", "no", &syn), CorrectnessGrade::Correct);
        assert_eq!(grade_answer("No.", "no", &syn), CorrectnessGrade::Correct);
        assert_eq!(grade_answer("yes", "no", &syn), CorrectnessGrade::Wrong);
    }

    #[test]
    fn grade_partial_by_token_f1() {
        let syn = SynonymTable::builtin();
        // tokens {two, cars, ahead} vs {two, cars}: F1 = 0.8.
        assert_eq!(
            grade_answer("two cars ahead", "two cars", &syn),
            CorrectnessGrade::PartiallyCorrect
        );
        assert_eq!(
            grade_answer("red light ahead on the left side", "red", &syn),
            CorrectnessGrade::Wrong
        );
    }

    #[test]
    fn grade_through_synonyms() {
        let syn = SynonymTable::builtin();
        assert_eq!(
            grade_answer("vehicle", "car", &syn),
            CorrectnessGrade::Correct
        );
        assert_eq!(
            grade_answer("signboard", "traffic sign", &syn),
            CorrectnessGrade::Correct
        );
    }

    #[test]
    fn grade_self_is_correct_for_any_answer() {
        let syn = SynonymTable::builtin();
        for text in ["yes", "Two cars.", "not enough information", "42"] {
            assert_eq!(grade_answer(text, text, &syn), CorrectnessGrade::Correct);
        }
    }

    #[test]
    fn grade_order_is_total() {
        assert!(CorrectnessGrade::Correct > CorrectnessGrade::PartiallyCorrect);
        assert!(CorrectnessGrade::PartiallyCorrect > CorrectnessGrade::Wrong);
    }

    #[test]
    fn synonym_table_parse_errors_carry_line_numbers() {
        let err = SynonymTable::parse("vehicle = car\nbogus line\n").unwrap_err();
        assert!(matches!(err, CoreError::Parse { line: 2, .. }));
    }
}
