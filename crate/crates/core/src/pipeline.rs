//! The extractor -> filter -> answerer seam.
//!
//! A [`Backend`] supplies the two neural stages (region-feature extraction
//! and answering) behind a deterministic contract; [`run_pipeline`] wires
//! them together with the feature filter optionally inserted in between.
//! The pretrained variant feeds the raw detection batch to the answerer;
//! the filtered variant applies the filter first and records the trace.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detection::{ClassVocabulary, DetectionSet, FilterConfig};
use crate::error::CoreError;
use crate::filter::{apply_filter, FilterTrace};

/// Sentinel answer when the filter drops every detection. Feeding an empty
/// batch to an encoder is an undefined contract, so the pipeline
/// short-circuits instead.
pub const NO_RELEVANT_OBJECTS: &str = "no relevant objects detected";

/// One question about one sample image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub sample_id: String,
}

/// Which pipeline is running: the unfiltered baseline or the
/// filter-integrated one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Pretrained,
    Filtered,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Pretrained, Variant::Filtered];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Pretrained => "pretrained",
            Variant::Filtered => "filtered",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "pretrained" => Ok(Variant::Pretrained),
            "filtered" => Ok(Variant::Filtered),
            other => Err(CoreError::Vocabulary(format!("unknown variant `{other}`"))),
        }
    }
}

/// A probability distribution over an ordered answer vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl AnswerDistribution {
    /// Validates that probabilities are non-negative, match labels
    /// one-for-one, and sum to 1 within 1e-6.
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self, CoreError> {
        if labels.len() != probs.len() {
            return Err(CoreError::InvalidDistribution(format!(
                "{} labels vs {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(CoreError::InvalidDistribution(format!(
                "negative or non-finite probability {p}"
            )));
        }
        if !labels.is_empty() {
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(CoreError::InvalidDistribution(format!(
                    "probabilities sum to {sum}, not 1"
                )));
            }
        }
        Ok(Self { labels, probs })
    }

    /// A point mass on a single label.
    pub fn point_mass(label: impl Into<String>) -> Self {
        Self {
            labels: vec![label.into()],
            probs: vec![1.0],
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// The label with maximal probability; ties break to the lowest index.
pub fn argmax_answer(dist: &AnswerDistribution) -> Result<String, CoreError> {
    if dist.is_empty() {
        return Err(CoreError::EmptyAnswerVocabulary);
    }
    let mut best = 0;
    for (i, &p) in dist.probs.iter().enumerate() {
        if p > dist.probs[best] {
            best = i;
        }
    }
    Ok(dist.labels[best].clone())
}

/// Outcome of one `(image, question, variant)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub question_id: String,
    pub variant: Variant,
    pub answer: String,
    pub distribution: AnswerDistribution,
    /// Distinct class names in the batch the answerer actually consumed:
    /// everything detected for the pretrained variant, the surviving classes
    /// for the filtered one.
    pub observed_features: BTreeSet<String>,
    /// Present iff the variant is filtered.
    pub trace: Option<FilterTrace>,
}

/// The two neural stages the pipeline plugs into.
///
/// Both stages must be deterministic given their inputs and the backend's
/// seed. Implementations must be safe for concurrent calls unless they
/// declare themselves serial, in which case the harness will not call them
/// from more than one worker at a time.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    /// The class-id space this backend's extractor emits.
    fn vocabulary(&self) -> &ClassVocabulary;

    /// Region-feature extraction for one image reference.
    fn extract_features(&self, image_ref: &str) -> Result<DetectionSet, CoreError>;

    /// Answer a question given the (possibly filtered) detection batch.
    fn answer(
        &self,
        dets: &DetectionSet,
        question: &Question,
    ) -> Result<AnswerDistribution, CoreError>;

    /// True if the backend cannot service concurrent calls.
    fn serial(&self) -> bool {
        false
    }
}

/// Run one `(image, question)` pair through the chosen variant.
///
/// `cfg` is required for [`Variant::Filtered`] and ignored otherwise. If the
/// filter drops every detection the result carries the
/// [`NO_RELEVANT_OBJECTS`] sentinel answer with empty observed features;
/// that is an expected outcome, not a fault.
pub fn run_pipeline(
    image_ref: &str,
    question: &Question,
    variant: Variant,
    backend: &dyn Backend,
    cfg: Option<&FilterConfig>,
) -> Result<PipelineResult, CoreError> {
    let dets = backend.extract_features(image_ref)?;
    let vocab = backend.vocabulary();

    let (consumed, trace) = match variant {
        Variant::Pretrained => (dets, None),
        Variant::Filtered => {
            let cfg = cfg.ok_or(CoreError::MissingFilterConfig)?;
            let (filtered, trace) = apply_filter(&dets, cfg, vocab)?;
            (filtered, Some(trace))
        }
    };

    if variant == Variant::Filtered && consumed.is_empty() {
        return Ok(PipelineResult {
            question_id: question.id.clone(),
            variant,
            answer: NO_RELEVANT_OBJECTS.to_string(),
            distribution: AnswerDistribution::point_mass(NO_RELEVANT_OBJECTS),
            observed_features: BTreeSet::new(),
            trace,
        });
    }

    let distribution = backend.answer(&consumed, question)?;
    let answer = argmax_answer(&distribution)?;
    Ok(PipelineResult {
        question_id: question.id.clone(),
        variant,
        answer,
        distribution,
        observed_features: consumed.class_names(vocab),
        trace,
    })
}
