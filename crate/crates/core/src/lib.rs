//! Core library for a driving-scene VQA evaluation toolkit.
//!
//! The centerpiece is a human-guided detection filter that sits between a
//! region-feature extractor and the visual encoder of a VQA model: it prunes
//! a detection batch down to driving-relevant classes above a confidence
//! threshold, preserving column alignment and original order. Around it the
//! crate provides everything needed to compare a filtered pipeline against
//! the unfiltered baseline and against human annotators at desk scale:
//!
//! - [`detection`]: columnar detection batches, the class vocabulary, and
//!   validation of their invariants.
//! - [`filter`]: the filter itself plus the canonical driving whitelist.
//! - [`pipeline`]: the extractor -> filter -> answerer seam with pluggable
//!   backends; [`mock`] ships a deterministic seeded backend so nothing here
//!   needs neural weights.
//! - [`metrics`] and [`scoring`]: cosine answer similarity against consensus
//!   human answers, aggregated as MAE / RMSE / Pearson per embedding
//!   provider per pipeline variant.
//! - [`overlap`]: feature-set comparison (Jaccard, precision/recall) and
//!   three-level answer grading.
//! - [`ingest`] and [`dump`]: corpus loading (manifests, human answers,
//!   ratings) and a bit-exact binary format for detection batches.
//!
//! All randomness is seeded and all aggregation orders are fixed, so every
//! run of a given configuration is byte-for-byte reproducible.

pub mod detection;
pub mod dump;
pub mod error;
pub mod filter;
pub mod fixtures;
pub mod hashing;
pub mod ingest;
pub mod metrics;
pub mod mock;
pub mod overlap;
pub mod pipeline;
pub mod scoring;
pub mod tensor;
pub mod text;

pub use detection::{ClassVocabulary, DetectionSet, FilterConfig, PipelineDims};
pub use error::CoreError;
pub use filter::{apply_filter, driving_whitelist, FilterTrace};
pub use pipeline::{run_pipeline, AnswerDistribution, Backend, PipelineResult, Question, Variant};
pub use scoring::{EmbeddingProvider, ScoreReport, SimilarityRow};
pub use tensor::TensorF32;
