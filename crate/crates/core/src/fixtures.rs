//! Deterministic test fixtures.
//!
//! Shipped as a regular module (not test-only) so integration tests, the
//! acceptance suite, and ad-hoc CLI experiments all construct the exact
//! same data. Everything here is a pure function of pinned seeds.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detection::{derive_normalized_boxes, ClassVocabulary, DetectionSet, FilterConfig};
use crate::error::CoreError;
use crate::filter::driving_whitelist;
use crate::hashing::fnv1a64_parts;
use crate::ingest::{
    AnnotatorAnswer, CameraChannel, HumanAnswerRecord, Manifest, RatingRecord, SampleManifestEntry,
    HUMAN_ANSWERS_FILE, MANIFEST_FILE, RATINGS_FILE,
};
use crate::ingest::{HumanAnswerFileRecord, QuestionRecord, SampleRecord, RATINGS_HEADER};
use crate::mock::{mock_vocabulary, MockBackend, MOCK_IMAGE_SIZE};
use crate::overlap::{grade_answer, CorrectnessGrade, SynonymTable};
use crate::pipeline::{run_pipeline, Backend, PipelineResult, Question, Variant};
use crate::tensor::TensorF32;

/// A random valid detection batch: `n` in `0..=max_rows` rows over `vocab`,
/// uniform scores, sorted box corners, `feature_width`-wide ROI features.
pub fn random_detection_set(
    seed: u64,
    max_rows: usize,
    feature_width: usize,
    vocab: &ClassVocabulary,
) -> DetectionSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(0..=max_rows);
    let (width, height) = MOCK_IMAGE_SIZE;

    let mut class_ids = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    let mut boxes = Vec::with_capacity(n * 4);
    let mut roi = Vec::with_capacity(n * feature_width);
    for _ in 0..n {
        class_ids.push(rng.gen_range(0..vocab.len()) as u32);
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
        for _ in 0..feature_width {
            roi.push(rng.gen_range(-1.0f32..1.0));
        }
    }
    let boxes = TensorF32::new(vec![n, 4], boxes).expect("generated boxes are well-formed");
    let normalized_boxes =
        derive_normalized_boxes(&boxes, MOCK_IMAGE_SIZE).expect("image size is non-zero");
    DetectionSet {
        class_ids,
        scores,
        boxes,
        normalized_boxes,
        roi_features: TensorF32::new(vec![n, feature_width], roi).expect("well-formed"),
        image_size: MOCK_IMAGE_SIZE,
    }
}

/// Fixture F1: a 36-row batch over the mock vocabulary in which exactly 17
/// rows carry a driving-whitelisted class with score >= 0.5.
///
/// The surviving rows sit at the even indices 0..=32; one of them scores
/// exactly at the threshold to pin the inclusive comparison. The 19
/// remainders split between irrelevant classes at high confidence and
/// whitelisted classes below threshold, so both drop reasons are exercised.
pub fn fixture_f1() -> (DetectionSet, ClassVocabulary) {
    let vocab = mock_vocabulary();
    let (cfg, _) = driving_whitelist(&vocab).expect("mock vocabulary covers the whitelist");
    let whitelisted: Vec<u32> = (0..vocab.len() as u32)
        .filter(|&id| cfg.whitelist.contains(vocab.name(id as usize).unwrap()))
        .collect();
    let irrelevant: Vec<u32> = (0..vocab.len() as u32)
        .filter(|id| !whitelisted.contains(id))
        .collect();

    let feature_width = 2048;
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1);
    let (width, height) = MOCK_IMAGE_SIZE;
    let mut class_ids = Vec::with_capacity(36);
    let mut scores = Vec::with_capacity(36);
    let mut boxes = Vec::with_capacity(36 * 4);
    let mut roi = Vec::with_capacity(36 * feature_width);
    for i in 0..36usize {
        let keep = i % 2 == 0 && i <= 32;
        if keep {
            class_ids.push(whitelisted[(i / 2) % whitelisted.len()]);
            // Row 0 sits exactly on the threshold.
            scores.push(if i == 0 {
                0.5
            } else {
                rng.gen_range(0.5f32..1.0)
            });
        } else if i % 4 == 1 {
            class_ids.push(irrelevant[(i / 4) % irrelevant.len()]);
            scores.push(rng.gen_range(0.6f32..1.0));
        } else {
            class_ids.push(whitelisted[(i / 3) % whitelisted.len()]);
            scores.push(rng.gen_range(0.0f32..0.5));
        }
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
        for _ in 0..feature_width {
            roi.push(rng.gen_range(-1.0f32..1.0));
        }
    }
    let boxes = TensorF32::new(vec![36, 4], boxes).expect("well-formed");
    let normalized_boxes =
        derive_normalized_boxes(&boxes, MOCK_IMAGE_SIZE).expect("image size is non-zero");
    let dets = DetectionSet {
        class_ids,
        scores,
        boxes,
        normalized_boxes,
        roi_features: TensorF32::new(vec![36, feature_width], roi).expect("well-formed"),
        image_size: MOCK_IMAGE_SIZE,
    };
    (dets, vocab)
}

/// Row indices of [`fixture_f1`] that survive the driving whitelist at
/// threshold 0.5.
pub fn fixture_f1_kept_indices() -> Vec<usize> {
    (0..=32).step_by(2).collect()
}

/// Seed for fixture corpus F2.
pub const F2_SEED: u64 = 23;

/// Question indices (0-based) where the baseline answer is taken as the
/// consensus, so the filtered pipeline is wrong there and neither score
/// vector is constant.
const F2_PRETRAINED_WINS: [usize; 2] = [3, 8];

const F2_QUESTION_TEXTS: [&str; 12] = [
    "Are there any vehicles in the ego lane?",
    "Is it safe to change lanes now?",
    "How many cars are ahead of us?",
    "Is there a pedestrian about to cross?",
    "Do I need to stop at this intersection?",
    "Is the traffic light green?",
    "Can I park on this side of the street?",
    "Is a truck blocking the view ahead?",
    "Should I yield before merging?",
    "Are the lane markings visible?",
    "Is there a cyclist beside the car?",
    "Is the road clear behind us?",
];

/// Fixture corpus F2, fully materialized in memory.
///
/// Twelve questions, two per camera channel, run against the seeded mock
/// backend. The consensus answer is the filtered pipeline's answer on ten
/// questions and the baseline's on two, and annotator ratings track answer
/// grades with small deterministic jitter. The corpus therefore realizes
/// the direction under test (the filtered variant agrees with humans more
/// often) without dictating any particular magnitude.
#[derive(Debug, Clone)]
pub struct F2Fixture {
    pub seed: u64,
    pub filter: FilterConfig,
    pub manifest: Manifest,
    pub human_answers: Vec<HumanAnswerRecord>,
    pub ratings: Vec<RatingRecord>,
    /// The pipeline results the fixture was constructed around, sorted by
    /// (question, variant); handy for tests that want the realized answers.
    pub expected_results: Vec<PipelineResult>,
}

impl F2Fixture {
    /// Questions in manifest order.
    pub fn questions(&self) -> Vec<&Question> {
        self.manifest
            .entries
            .iter()
            .flat_map(|e| e.question_ids.iter())
            .filter_map(|id| self.manifest.questions.get(id))
            .collect()
    }
}

/// Build fixture F2 from its pinned seed.
pub fn fixture_f2() -> F2Fixture {
    build_f2(F2_SEED)
}

fn build_f2(seed: u64) -> F2Fixture {
    let backend = MockBackend::new(seed);
    let (cfg, _) = driving_whitelist(backend.vocabulary()).expect("mock vocabulary covers it");
    let synonyms = SynonymTable::builtin();

    let mut manifest = Manifest::default();
    let mut human_answers = Vec::new();
    let mut ratings = Vec::new();
    let mut expected_results = Vec::new();

    for (i, text) in F2_QUESTION_TEXTS.iter().enumerate() {
        let camera = CameraChannel::ALL[i / 2];
        let sample_id = format!("s{:02}", i + 1);
        let question_id = format!("q{:02}", i + 1);
        let question = Question {
            id: question_id.clone(),
            text: text.to_string(),
            sample_id: sample_id.clone(),
        };

        // Pick the first image reference (deterministically) for which the
        // filter keeps something and actually changes the answer.
        let mut chosen = None;
        for attempt in 0..64 {
            let image_ref = format!("images/{camera}_{}_{attempt}.jpg", i % 2);
            let pretrained =
                run_pipeline(&image_ref, &question, Variant::Pretrained, &backend, None)
                    .expect("mock pipeline cannot fail");
            let filtered = run_pipeline(
                &image_ref,
                &question,
                Variant::Filtered,
                &backend,
                Some(&cfg),
            )
            .expect("mock pipeline cannot fail");
            if !filtered.observed_features.is_empty() && filtered.answer != pretrained.answer {
                chosen = Some((image_ref, pretrained, filtered));
                break;
            }
        }
        let (image_ref, pretrained, filtered) =
            chosen.expect("a usable image reference exists within 64 attempts");

        let consensus = if F2_PRETRAINED_WINS.contains(&i) {
            pretrained.answer.clone()
        } else {
            filtered.answer.clone()
        };
        let alternative = if F2_PRETRAINED_WINS.contains(&i) {
            filtered.answer.clone()
        } else {
            pretrained.answer.clone()
        };

        // Ten annotators: seven vote the consensus, three the alternative.
        // Observed features are per-annotator subsets of the driving-relevant
        // classes actually present in the scene.
        let scene_features: Vec<String> = filtered.observed_features.iter().cloned().collect();
        let answers: Vec<AnnotatorAnswer> = (0..10)
            .map(|k| {
                let rater_id = format!("r{:02}", k + 1);
                let answer = if k < 7 {
                    consensus.clone()
                } else {
                    alternative.clone()
                };
                let mut observed: BTreeSet<String> = scene_features
                    .iter()
                    .filter(|class| {
                        fnv1a64_parts([
                            question_id.as_bytes(),
                            rater_id.as_bytes(),
                            class.as_bytes(),
                        ]) % 4
                            != 0
                    })
                    .cloned()
                    .collect();
                if observed.is_empty() {
                    observed = filtered.observed_features.clone();
                }
                AnnotatorAnswer {
                    rater_id,
                    answer,
                    observed_features: observed,
                }
            })
            .collect();
        let votes: Vec<String> = answers.iter().map(|a| a.answer.clone()).collect();
        let (consensus_answer, consensus_count, tie) =
            crate::ingest::majority_vote(&votes).expect("ten votes");
        human_answers.push(HumanAnswerRecord {
            question_id: question_id.clone(),
            answers,
            consensus_answer,
            consensus_count,
            tie,
        });

        // Ratings track the mechanical grade of each variant's answer.
        // Raters agree tightly that a correct answer deserves a 5; for a
        // wrong one, how harshly the panel punishes it varies per question,
        // so auto and human scores disagree most where answers are wrong.
        // Same rule for both variants; the direction comes from answer
        // quality alone.
        for result in [&pretrained, &filtered] {
            let grade = grade_answer(&result.answer, &consensus, &synonyms);
            let harshness = fnv1a64_parts([
                seed.to_le_bytes().as_slice(),
                question_id.as_bytes(),
                result.variant.as_str().as_bytes(),
                b"harshness",
            ]);
            let wrong_base: i8 = 1 + (harshness % 3) as i8;
            for k in 0..10u64 {
                let h = fnv1a64_parts([
                    seed.to_le_bytes().as_slice(),
                    question_id.as_bytes(),
                    result.variant.as_str().as_bytes(),
                    k.to_le_bytes().as_slice(),
                ]);
                let rating: i8 = match grade {
                    CorrectnessGrade::Correct => 5 - (h % 5 == 0) as i8,
                    CorrectnessGrade::PartiallyCorrect => 3 + (h % 3) as i8 - 1,
                    CorrectnessGrade::Wrong => wrong_base + [-1, 0, 0, 1][(h % 4) as usize],
                };
                ratings.push(RatingRecord {
                    question_id: question_id.clone(),
                    variant: result.variant,
                    rater_id: format!("r{:02}", k + 1),
                    rating: rating.clamp(1, 5) as u8,
                });
            }
        }

        manifest.questions.insert(question_id.clone(), question);
        manifest.entries.push(SampleManifestEntry {
            sample_id,
            camera,
            image_ref,
            question_ids: vec![question_id],
        });
        expected_results.push(pretrained);
        expected_results.push(filtered);
    }

    F2Fixture {
        seed,
        filter: cfg,
        manifest,
        human_answers,
        ratings,
        expected_results,
    }
}

/// Write fixture F2 as an on-disk corpus (manifest, human answers, ratings)
/// under `root`, creating the directory if needed.
pub fn write_fixture_f2(root: &Path) -> Result<F2Fixture, CoreError> {
    let fixture = fixture_f2();
    std::fs::create_dir_all(root).map_err(|e| CoreError::io(root, e))?;

    let mut manifest_lines = String::new();
    for entry in &fixture.manifest.entries {
        let record = SampleRecord {
            sample_id: entry.sample_id.clone(),
            camera: entry.camera,
            image_ref: entry.image_ref.clone(),
            questions: entry
                .question_ids
                .iter()
                .map(|id| {
                    let q = &fixture.manifest.questions[id];
                    QuestionRecord {
                        id: q.id.clone(),
                        text: q.text.clone(),
                    }
                })
                .collect(),
        };
        manifest_lines.push_str(&serde_json::to_string(&record).expect("serializable"));
        manifest_lines.push('\n');
    }
    let manifest_path = root.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, manifest_lines).map_err(|e| CoreError::io(&manifest_path, e))?;

    let mut answer_lines = String::new();
    for record in &fixture.human_answers {
        let file_record = HumanAnswerFileRecord {
            question_id: record.question_id.clone(),
            answers: record.answers.clone(),
        };
        answer_lines.push_str(&serde_json::to_string(&file_record).expect("serializable"));
        answer_lines.push('\n');
    }
    let answers_path = root.join(HUMAN_ANSWERS_FILE);
    std::fs::write(&answers_path, answer_lines).map_err(|e| CoreError::io(&answers_path, e))?;

    let mut ratings_csv = String::from(RATINGS_HEADER);
    ratings_csv.push('\n');
    for r in &fixture.ratings {
        ratings_csv.push_str(&format!(
            "{},{},{},{}\n",
            r.question_id, r.variant, r.rater_id, r.rating
        ));
    }
    let ratings_path = root.join(RATINGS_FILE);
    std::fs::write(&ratings_path, ratings_csv).map_err(|e| CoreError::io(&ratings_path, e))?;

    Ok(fixture)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::validate_detection_set;
    use crate::filter::apply_filter;

    #[test]
    fn f1_is_valid_and_filters_36_to_17() {
        let (dets, vocab) = fixture_f1();
        assert_eq!(dets.len(), 36);
        assert_eq!(dets.feature_width(), 2048);
        assert!(validate_detection_set(&dets, &vocab).is_ok());

        let (cfg, _) = driving_whitelist(&vocab).unwrap();
        let (filtered, trace) = apply_filter(&dets, &cfg, &vocab).unwrap();
        assert_eq!(trace.input_count, 36);
        assert_eq!(trace.output_count, 17);
        assert_eq!(filtered.len(), 17);
        assert_eq!(trace.kept_indices, fixture_f1_kept_indices());
        // Row 0 passes at exactly the threshold.
        assert_eq!(dets.scores[0], 0.5);
    }

    #[test]
    fn f2_has_twelve_questions_two_per_camera() {
        let fixture = fixture_f2();
        assert_eq!(fixture.manifest.entries.len(), 12);
        assert_eq!(fixture.manifest.questions.len(), 12);
        for camera in CameraChannel::ALL {
            let count = fixture
                .manifest
                .entries
                .iter()
                .filter(|e| e.camera == camera)
                .count();
            assert_eq!(count, 2, "camera {camera}");
        }
        assert_eq!(fixture.human_answers.len(), 12);
        // 12 questions x 2 variants x 10 raters.
        assert_eq!(fixture.ratings.len(), 240);
        assert!(fixture.human_answers.iter().all(|h| !h.tie));
        assert!(fixture.human_answers.iter().all(|h| h.consensus_count == 7));
    }

    #[test]
    fn f2_filtered_answers_match_consensus_strictly_more_often() {
        let fixture = fixture_f2();
        let consensus: std::collections::BTreeMap<&str, &str> = fixture
            .human_answers
            .iter()
            .map(|h| (h.question_id.as_str(), h.consensus_answer.as_str()))
            .collect();
        let mut filtered_correct = 0;
        let mut pretrained_correct = 0;
        for result in &fixture.expected_results {
            let matches = consensus[result.question_id.as_str()] == result.answer;
            match result.variant {
                Variant::Filtered if matches => filtered_correct += 1,
                Variant::Pretrained if matches => pretrained_correct += 1,
                _ => {}
            }
        }
        assert_eq!(filtered_correct, 10);
        assert_eq!(pretrained_correct, 2);
    }

    #[test]
    fn f2_round_trips_through_the_corpus_loaders() {
        let dir = std::env::temp_dir().join(format!("f2-roundtrip-{}", std::process::id()));
        let fixture = write_fixture_f2(&dir).unwrap();
        let corpus = crate::ingest::Corpus::load(&dir).unwrap();
        assert_eq!(corpus.manifest.entries, fixture.manifest.entries);
        assert_eq!(corpus.manifest.questions, fixture.manifest.questions);
        assert_eq!(corpus.human_answers, fixture.human_answers);
        assert_eq!(corpus.ratings, fixture.ratings);
        assert!(corpus.manifest.warnings.is_empty());
        assert!(corpus
            .validate_for_scoring(&[Variant::Pretrained, Variant::Filtered])
            .is_empty());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn random_sets_are_valid_and_cover_empty() {
        let vocab = mock_vocabulary();
        let mut saw_empty = false;
        for seed in 0..200 {
            let set = random_detection_set(seed, 8, 4, &vocab);
            assert!(validate_detection_set(&set, &vocab).is_ok());
            saw_empty |= set.is_empty();
        }
        assert!(saw_empty, "n = 0 should occur within 200 draws");
    }
}
