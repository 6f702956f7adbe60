//! A deterministic mock backend.
//!
//! Stands in for the real extractor + VQA stack so the whole pipeline runs
//! at desk scale with no weights and no network. Both stages are pure
//! functions of the seed and their inputs:
//!
//! - the extractor synthesizes a detection batch from
//!   `hash(seed, image_ref)`;
//! - the answerer draws its distribution from
//!   `hash(seed, consumed class multiset, question keyword bag)`.
//!
//! Keying the answer on the consumed class multiset is the load-bearing
//! property: filtering the batch changes the multiset, which can change the
//! answer, which is exactly the effect the harness measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detection::{derive_normalized_boxes, ClassVocabulary, DetectionSet};
use crate::error::CoreError;
use crate::filter::canonical_driving_whitelist;
use crate::hashing::fnv1a64_parts;
use crate::pipeline::{AnswerDistribution, Backend, Question};
use crate::tensor::TensorF32;
use crate::text::tokenize;

/// Image size the mock extractor reports, in pixels (width, height).
pub const MOCK_IMAGE_SIZE: (u32, u32) = (1600, 900);

/// Classes with no bearing on driving, mixed into the mock vocabulary so the
/// filter always has something to prune.
const IRRELEVANT_CLASSES: [&str; 9] = [
    "tree",
    "sky",
    "building",
    "tower",
    "cloud",
    "grass",
    "fence",
    "billboard",
    "mountain",
];

const ANSWER_LABELS: [&str; 16] = [
    "yes",
    "no",
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "left",
    "right",
    "straight",
    "stop",
    "go",
    "green",
    "red",
    "not enough information",
];

/// The vocabulary every [`MockBackend`] emits: the canonical driving
/// whitelist plus irrelevant scenery classes.
pub fn mock_vocabulary() -> ClassVocabulary {
    let mut names = canonical_driving_whitelist();
    names.extend(IRRELEVANT_CLASSES.iter().map(|s| s.to_string()));
    ClassVocabulary::new(names).expect("built-in mock vocabulary is unique")
}

/// Deterministic seeded backend; see the module docs.
#[derive(Debug, Clone)]
pub struct MockBackend {
    seed: u64,
    vocab: ClassVocabulary,
    answer_labels: Vec<String>,
    max_detections: usize,
    feature_width: usize,
}

impl MockBackend {
    /// Backend with the default profile: at most 36 detections, 2048-wide
    /// ROI features.
    pub fn new(seed: u64) -> Self {
        Self::with_dims(seed, 36, 2048)
    }

    /// Backend with custom batch limits; smaller feature widths keep bulk
    /// test runs cheap.
    pub fn with_dims(seed: u64, max_detections: usize, feature_width: usize) -> Self {
        assert!(max_detections >= 1 && feature_width >= 1);
        Self {
            seed,
            vocab: mock_vocabulary(),
            answer_labels: ANSWER_LABELS.iter().map(|s| s.to_string()).collect(),
            max_detections,
            feature_width,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn answer_labels(&self) -> &[String] {
        &self.answer_labels
    }

    fn rng_for(&self, parts: &[&[u8]]) -> ChaCha8Rng {
        let mut key: Vec<&[u8]> = vec![];
        let seed_bytes = self.seed.to_le_bytes();
        key.push(&seed_bytes);
        key.extend_from_slice(parts);
        ChaCha8Rng::seed_from_u64(fnv1a64_parts(key.iter().copied()))
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn vocabulary(&self) -> &ClassVocabulary {
        &self.vocab
    }

    fn extract_features(&self, image_ref: &str) -> Result<DetectionSet, CoreError> {
        let mut rng = self.rng_for(&[b"extract", image_ref.as_bytes()]);
        let n = rng.gen_range(4..=self.max_detections);
        let (width, height) = MOCK_IMAGE_SIZE;

        let mut class_ids = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n);
        let mut boxes = Vec::with_capacity(n * 4);
        for _ in 0..n {
            class_ids.push(rng.gen_range(0..self.vocab.len()) as u32);
            scores.push(rng.gen_range(0.0f32..=1.0));
            let mut xs = [
                rng.gen_range(0.0f32..width as f32),
                rng.gen_range(0.0f32..width as f32),
            ];
            let mut ys = [
                rng.gen_range(0.0f32..height as f32),
                rng.gen_range(0.0f32..height as f32),
            ];
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
            boxes.extend_from_slice(&[xs[0], ys[0], xs[1], ys[1]]);
        }
        let mut roi = Vec::with_capacity(n * self.feature_width);
        for _ in 0..n * self.feature_width {
            roi.push(rng.gen_range(-1.0f32..1.0));
        }

        let boxes = TensorF32::new(vec![n, 4], boxes)?;
        let normalized_boxes = derive_normalized_boxes(&boxes, MOCK_IMAGE_SIZE)?;
        Ok(DetectionSet {
            class_ids,
            scores,
            boxes,
            normalized_boxes,
            roi_features: TensorF32::new(vec![n, self.feature_width], roi)?,
            image_size: MOCK_IMAGE_SIZE,
        })
    }

    fn answer(
        &self,
        dets: &DetectionSet,
        question: &Question,
    ) -> Result<AnswerDistribution, CoreError> {
        // Consumed class multiset, as sorted name:count pairs.
        let mut counts = std::collections::BTreeMap::new();
        for &id in &dets.class_ids {
            let name = self
                .vocab
                .name(id as usize)
                .ok_or_else(|| CoreError::Backend(format!("class id {id} outside vocabulary")))?;
            *counts.entry(name.to_string()).or_insert(0usize) += 1;
        }
        let multiset = counts
            .iter()
            .map(|(name, count)| format!("{name}:{count}"))
            .collect::<Vec<_>>()
            .join(";");

        // Question keyword bag: sorted tokens, duplicates kept.
        let mut tokens = tokenize(&question.text);
        tokens.sort();
        let bag = tokens.join(" ");

        let mut rng = self.rng_for(&[b"answer", multiset.as_bytes(), bag.as_bytes()]);
        let weights: Vec<f64> = (0..self.answer_labels.len())
            .map(|_| rng.gen_range(0.05f64..1.0))
            .collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        AnswerDistribution::new(self.answer_labels.clone(), probs)
    }
}
