//! Answer scoring against human references.
//!
//! Each model answer is embedded alongside the consensus human answer; the
//! clamped cosine between them is the automated score, and the annotators'
//! 1-5 ratings of the model answer (normalized to `[0,1]`) are the human
//! score. MAE, RMSE, and Pearson correlation between the two score vectors
//! are aggregated per embedding provider per pipeline variant.
//!
//! Only a deterministic hashing provider ships here, so everything runs
//! offline; real sentence-embedding models plug in through
//! [`EmbeddingProvider`].

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::hashing::fnv1a64_parts;
use crate::ingest::{HumanAnswerRecord, RatingRecord};
use crate::metrics::{cosine_similarity, mae, pearson, rmse};
use crate::pipeline::{PipelineResult, Variant};
use crate::text::tokenize;

/// A sentence-embedding model: deterministic, unit-norm output.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Embed `text` into a unit-norm vector of length [`dim`](Self::dim).
    fn embed(&self, text: &str) -> Result<Vec<f64>, CoreError>;
}

/// Feature-hashing mock provider.
///
/// The published rule, so tests can recompute it independently: lowercase
/// alphanumeric tokens; for each token `h = fnv1a64(salt, token)`; add
/// `+1` or `-1` (sign from bit 32 of `h`) at index `h mod dim`; l2-normalize
/// the result. Texts with no tokens, or whose tokens cancel exactly, have
/// no direction and are rejected as zero-magnitude.
#[derive(Debug, Clone)]
pub struct HashEmbedding {
    name: String,
    dim: usize,
    salt: u64,
}

impl HashEmbedding {
    pub const DEFAULT_DIM: usize = 256;

    pub fn new(name: impl Into<String>, dim: usize, salt: u64) -> Self {
        assert!(dim >= 1);
        Self {
            name: name.into(),
            dim,
            salt,
        }
    }

    /// The provider used when a run does not name any: `hash`, 256-wide,
    /// salt 0.
    pub fn default_provider() -> Self {
        Self::new("hash", Self::DEFAULT_DIM, 0)
    }
}

impl EmbeddingProvider for HashEmbedding {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, CoreError> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(CoreError::ZeroMagnitudeEmbedding);
        }
        let salt = self.salt.to_le_bytes();
        let mut v = vec![0.0f64; self.dim];
        for token in &tokens {
            let h = fnv1a64_parts([salt.as_slice(), token.as_bytes()]);
            let idx = (h % self.dim as u64) as usize;
            let sign = if (h >> 32) & 1 == 0 { 1.0 } else { -1.0 };
            v[idx] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(CoreError::ZeroMagnitudeEmbedding);
        }
        for x in &mut v {
            *x /= norm;
        }
        Ok(v)
    }
}

/// Similarity of a model answer to the reference, in `[0, 1]`.
///
/// Clamped cosine of the two embeddings; negative cosine clamps to 0 since
/// subjective ratings have no negative range.
pub fn answer_similarity(
    model_answer: &str,
    reference_answer: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, CoreError> {
    if model_answer.trim().is_empty() || reference_answer.trim().is_empty() {
        return Err(CoreError::EmptyText);
    }
    let m = provider.embed(model_answer)?;
    let r = provider.embed(reference_answer)?;
    Ok(cosine_similarity(&m, &r)?.max(0.0))
}

/// One scored `(question, variant, provider)` triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRow {
    pub question_id: String,
    pub variant: Variant,
    pub provider: String,
    /// Clamped cosine similarity of model answer vs consensus, in `[0,1]`.
    pub auto_score: f64,
    /// Mean annotator rating of the model answer, normalized to `[0,1]`.
    pub human_score: f64,
}

/// Aggregated metrics for one `(provider, variant)` cell group.
///
/// `pearson` is `None` when the correlation is undefined (fewer than two
/// rows or zero variance); the report never fabricates a 0 for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCell {
    pub provider: String,
    pub variant: Variant,
    pub mae: f64,
    pub rmse: f64,
    pub pearson: Option<f64>,
}

/// Full scoring output: per-question rows plus per-(provider, variant)
/// aggregates, both in fixed sorted order so output is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub rows: Vec<SimilarityRow>,
    pub aggregates: Vec<AggregateCell>,
}

impl ScoreReport {
    /// Recompute aggregates from `rows` alone. Used by tests to pin the
    /// invariant that aggregates are a pure function of the rows.
    pub fn aggregates_from_rows(rows: &[SimilarityRow]) -> Vec<AggregateCell> {
        let mut keys: Vec<(String, Variant)> = rows
            .iter()
            .map(|r| (r.provider.clone(), r.variant))
            .collect();
        keys.sort();
        keys.dedup();

        let mut cells = Vec::with_capacity(keys.len());
        for (provider, variant) in keys {
            let autos: Vec<f64> = rows
                .iter()
                .filter(|r| r.provider == provider && r.variant == variant)
                .map(|r| r.auto_score)
                .collect();
            let humans: Vec<f64> = rows
                .iter()
                .filter(|r| r.provider == provider && r.variant == variant)
                .map(|r| r.human_score)
                .collect();
            cells.push(AggregateCell {
                provider,
                variant,
                mae: mae(&autos, &humans).expect("non-empty by construction"),
                rmse: rmse(&autos, &humans).expect("non-empty by construction"),
                pearson: pearson(&autos, &humans).ok(),
            });
        }
        cells
    }

    pub fn cell(&self, provider: &str, variant: Variant) -> Option<&AggregateCell> {
        self.aggregates
            .iter()
            .find(|c| c.provider == provider && c.variant == variant)
    }
}

/// Normalize a 1-5 annotator rating to `[0, 1]`.
pub fn normalize_rating(rating: u8) -> f64 {
    (rating as f64 - 1.0) / 4.0
}

/// Score a batch of pipeline results against human references.
///
/// Every result needs a consensus answer for its question and at least one
/// rating for its `(question, variant)`; a missing one is an error naming
/// the question. Rows come out sorted by `(provider, variant, question_id)`
/// and aggregates by `(provider, variant)`.
pub fn evaluate_run(
    results: &[PipelineResult],
    humans: &[HumanAnswerRecord],
    providers: &[Box<dyn EmbeddingProvider>],
    ratings: &[RatingRecord],
) -> Result<ScoreReport, CoreError> {
    use std::collections::BTreeMap;

    let consensus: BTreeMap<&str, &str> = humans
        .iter()
        .map(|h| (h.question_id.as_str(), h.consensus_answer.as_str()))
        .collect();

    let mut rating_sums: BTreeMap<(&str, Variant), (f64, usize)> = BTreeMap::new();
    for r in ratings {
        let entry = rating_sums
            .entry((r.question_id.as_str(), r.variant))
            .or_insert((0.0, 0));
        entry.0 += normalize_rating(r.rating);
        entry.1 += 1;
    }

    let mut rows = Vec::with_capacity(results.len() * providers.len());
    for result in results {
        let reference = consensus
            .get(result.question_id.as_str())
            .copied()
            .ok_or_else(|| CoreError::MissingConsensus(result.question_id.clone()))?;
        let (sum, count) = rating_sums
            .get(&(result.question_id.as_str(), result.variant))
            .copied()
            .ok_or_else(|| CoreError::MissingRating {
                question_id: result.question_id.clone(),
                variant: result.variant.to_string(),
            })?;
        let human_score = sum / count as f64;
        for provider in providers {
            let auto_score = answer_similarity(&result.answer, reference, provider.as_ref())?;
            rows.push(SimilarityRow {
                question_id: result.question_id.clone(),
                variant: result.variant,
                provider: provider.name().to_string(),
                auto_score,
                human_score,
            });
        }
    }
    rows.sort_by(|a, b| {
        (&a.provider, a.variant, &a.question_id).cmp(&(&b.provider, b.variant, &b.question_id))
    });

    let aggregates = ScoreReport::aggregates_from_rows(&rows);
    Ok(ScoreReport { rows, aggregates })
}
