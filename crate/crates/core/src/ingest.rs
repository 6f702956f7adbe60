//! Corpus loading: sample manifests, human survey answers, ratings.
//!
//! Manifests and answers are line-oriented UTF-8 JSON (one record per line,
//! diff-friendly); ratings are a four-column CSV. Loaders reject rather
//! than repair: every rejection carries the file and line it came from.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::pipeline::{Question, Variant};
use crate::text::{normalize_answer, normalize_class};

/// Annotators expected per question by the study design. Other counts are
/// worth a warning, not a failure.
pub const EXPECTED_ANNOTATORS: usize = 10;

/// Entries a conforming corpus has per camera channel (lint only).
pub const EXPECTED_SAMPLES_PER_CAMERA: usize = 2;

/// The six vehicle-mounted viewpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraChannel {
    Front,
    FrontLeft,
    FrontRight,
    Back,
    BackLeft,
    BackRight,
}

impl CameraChannel {
    pub const ALL: [CameraChannel; 6] = [
        CameraChannel::Front,
        CameraChannel::FrontLeft,
        CameraChannel::FrontRight,
        CameraChannel::Back,
        CameraChannel::BackLeft,
        CameraChannel::BackRight,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CameraChannel::Front => "front",
            CameraChannel::FrontLeft => "front_left",
            CameraChannel::FrontRight => "front_right",
            CameraChannel::Back => "back",
            CameraChannel::BackLeft => "back_left",
            CameraChannel::BackRight => "back_right",
        }
    }
}

impl std::fmt::Display for CameraChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One sample image in the manifest and the questions asked about it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleManifestEntry {
    pub sample_id: String,
    pub camera: CameraChannel,
    /// Opaque path or URI; only real-model adapters dereference it.
    pub image_ref: String,
    pub question_ids: Vec<String>,
}

/// A loaded, validated manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<SampleManifestEntry>,
    pub questions: BTreeMap<String, Question>,
    /// Lints (per-camera counts off the conforming 2, for instance).
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn contains_question(&self, question_id: &str) -> bool {
        self.questions.contains_key(question_id)
    }
}

/// On-disk manifest line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct SampleRecord {
    pub sample_id: String,
    pub camera: CameraChannel,
    pub image_ref: String,
    pub questions: Vec<QuestionRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct QuestionRecord {
    pub id: String,
    pub text: String,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, CoreError> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.to_string()))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect())
}

/// Load and validate a manifest. Duplicate sample or question ids and empty
/// question text are errors; per-camera counts off the conforming two are
/// warnings.
pub fn load_manifest(path: &Path) -> Result<Manifest, CoreError> {
    let mut manifest = Manifest::default();
    let mut camera_counts: BTreeMap<CameraChannel, usize> = BTreeMap::new();
    let mut sample_ids = HashSet::new();

    for (line, text) in read_lines(path)? {
        let record: SampleRecord =
            serde_json::from_str(&text).map_err(|e| CoreError::parse(path, line, e.to_string()))?;
        if !sample_ids.insert(record.sample_id.clone()) {
            return Err(CoreError::DuplicateId {
                id: record.sample_id,
                path: path.to_path_buf(),
            });
        }
        let mut question_ids = Vec::with_capacity(record.questions.len());
        for q in record.questions {
            if q.text.trim().is_empty() {
                return Err(CoreError::parse(
                    path,
                    line,
                    format!("question `{}` has empty text", q.id),
                ));
            }
            if manifest.questions.contains_key(&q.id) {
                return Err(CoreError::DuplicateId {
                    id: q.id,
                    path: path.to_path_buf(),
                });
            }
            question_ids.push(q.id.clone());
            manifest.questions.insert(
                q.id.clone(),
                Question {
                    id: q.id,
                    text: q.text,
                    sample_id: record.sample_id.clone(),
                },
            );
        }
        *camera_counts.entry(record.camera).or_insert(0) += 1;
        manifest.entries.push(SampleManifestEntry {
            sample_id: record.sample_id,
            camera: record.camera,
            image_ref: record.image_ref,
            question_ids,
        });
    }

    for camera in CameraChannel::ALL {
        let count = camera_counts.get(&camera).copied().unwrap_or(0);
        if count != EXPECTED_SAMPLES_PER_CAMERA {
            manifest.warnings.push(format!(
                "camera {camera} has {count} samples, expected {EXPECTED_SAMPLES_PER_CAMERA}"
            ));
        }
    }
    Ok(manifest)
}

/// One annotator's response to one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorAnswer {
    pub rater_id: String,
    pub answer: String,
    /// Class names the annotator reported looking at.
    pub observed_features: BTreeSet<String>,
}

/// All annotator answers for one question plus the majority-vote consensus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanAnswerRecord {
    pub question_id: String,
    pub answers: Vec<AnnotatorAnswer>,
    pub consensus_answer: String,
    pub consensus_count: usize,
    /// True when the top vote count was shared and the lexicographic
    /// tie-break decided the winner.
    pub tie: bool,
}

impl HumanAnswerRecord {
    /// Union of every annotator's observed features, normalized.
    pub fn observed_features(&self) -> BTreeSet<String> {
        self.answers
            .iter()
            .flat_map(|a| a.observed_features.iter())
            .map(|f| normalize_class(f))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct HumanAnswerFileRecord {
    pub question_id: String,
    pub answers: Vec<AnnotatorAnswer>,
}

/// Majority vote over normalized answers.
///
/// Returns `(winner, vote count, tie flag)`. Ties resolve to the
/// lexicographically smallest answer and are flagged, so pipelines stay
/// reproducible without hiding that consensus failed. Order-insensitive by
/// construction.
pub fn majority_vote(answers: &[String]) -> Result<(String, usize, bool), CoreError> {
    if answers.is_empty() {
        return Err(CoreError::EmptyVote);
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for answer in answers {
        *counts.entry(normalize_answer(answer)).or_insert(0) += 1;
    }
    let best = *counts.values().max().expect("non-empty");
    // Ascending key order: the first hit is the lexicographically smallest.
    let winner = counts
        .iter()
        .find(|(_, &c)| c == best)
        .map(|(k, _)| k.clone())
        .expect("non-empty");
    let tie = counts.values().filter(|&&c| c == best).count() > 1;
    Ok((winner, best, tie))
}

/// Load human answers, computing consensus per question. Every record must
/// reference a question in `manifest`; duplicates are errors. Annotator
/// counts other than ten produce warnings.
pub fn load_human_answers(
    path: &Path,
    manifest: &Manifest,
) -> Result<(Vec<HumanAnswerRecord>, Vec<String>), CoreError> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();

    for (line, text) in read_lines(path)? {
        let record: HumanAnswerFileRecord =
            serde_json::from_str(&text).map_err(|e| CoreError::parse(path, line, e.to_string()))?;
        if !manifest.contains_question(&record.question_id) {
            return Err(CoreError::DanglingQuestion {
                question_id: record.question_id,
                path: path.to_path_buf(),
            });
        }
        if !seen.insert(record.question_id.clone()) {
            return Err(CoreError::DuplicateId {
                id: record.question_id,
                path: path.to_path_buf(),
            });
        }
        if record.answers.is_empty() {
            return Err(CoreError::parse(
                path,
                line,
                format!("question `{}` has no annotator answers", record.question_id),
            ));
        }
        if record.answers.len() != EXPECTED_ANNOTATORS {
            warnings.push(format!(
                "question `{}` has {} annotators, expected {EXPECTED_ANNOTATORS}",
                record.question_id,
                record.answers.len()
            ));
        }
        let votes: Vec<String> = record.answers.iter().map(|a| a.answer.clone()).collect();
        let (consensus_answer, consensus_count, tie) = majority_vote(&votes)?;
        records.push(HumanAnswerRecord {
            question_id: record.question_id,
            answers: record.answers,
            consensus_answer,
            consensus_count,
            tie,
        });
    }
    Ok((records, warnings))
}

/// One rating row: an annotator's 1-5 judgment of a model answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub question_id: String,
    pub variant: Variant,
    pub rater_id: String,
    pub rating: u8,
}

pub(crate) const RATINGS_HEADER: &str = "question_id,variant,rater_id,rating";

/// Load ratings from CSV (`question_id,variant,rater_id,rating`, rating in
/// 1..=5). Dangling questions and duplicate `(question, variant, rater)`
/// rows are errors.
pub fn load_ratings(path: &Path, manifest: &Manifest) -> Result<Vec<RatingRecord>, CoreError> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == RATINGS_HEADER => {}
        Some((_, header)) => {
            return Err(CoreError::parse(
                path,
                1,
                format!(
                    "expected header `{RATINGS_HEADER}`, got `{}`",
                    header.trim()
                ),
            ))
        }
        None => return Err(CoreError::parse(path, 1, "empty ratings file")),
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(CoreError::parse(
                path,
                line,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let question_id = fields[0].to_string();
        if !manifest.contains_question(&question_id) {
            return Err(CoreError::DanglingQuestion {
                question_id,
                path: path.to_path_buf(),
            });
        }
        let variant: Variant = fields[1].parse().map_err(|_| {
            CoreError::parse(path, line, format!("unknown variant `{}`", fields[1]))
        })?;
        let rater_id = fields[2].to_string();
        let rating: u8 = fields[3]
            .parse()
            .map_err(|_| CoreError::parse(path, line, format!("bad rating `{}`", fields[3])))?;
        if !(1..=5).contains(&rating) {
            return Err(CoreError::parse(
                path,
                line,
                format!("rating {rating} outside 1..=5"),
            ));
        }
        if !seen.insert((question_id.clone(), variant, rater_id.clone())) {
            return Err(CoreError::DuplicateId {
                id: format!("{question_id}/{variant}/{rater_id}"),
                path: path.to_path_buf(),
            });
        }
        records.push(RatingRecord {
            question_id,
            variant,
            rater_id,
            rating,
        });
    }
    Ok(records)
}

/// Standard file names under a corpus root.
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const HUMAN_ANSWERS_FILE: &str = "human_answers.jsonl";
pub const RATINGS_FILE: &str = "ratings.csv";

/// Everything a scoring run reads, loaded from one corpus root.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub root: PathBuf,
    pub manifest: Manifest,
    pub human_answers: Vec<HumanAnswerRecord>,
    pub ratings: Vec<RatingRecord>,
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn load(root: &Path) -> Result<Self, CoreError> {
        let manifest = load_manifest(&root.join(MANIFEST_FILE))?;
        let (human_answers, answer_warnings) =
            load_human_answers(&root.join(HUMAN_ANSWERS_FILE), &manifest)?;
        let ratings = load_ratings(&root.join(RATINGS_FILE), &manifest)?;
        let mut warnings = manifest.warnings.clone();
        warnings.extend(answer_warnings);
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
            human_answers,
            ratings,
            warnings,
        })
    }

    /// Consensus record for a question, if present.
    pub fn human_record(&self, question_id: &str) -> Option<&HumanAnswerRecord> {
        self.human_answers
            .iter()
            .find(|h| h.question_id == question_id)
    }

    /// Cross-reference check before a scoring run: every manifest question
    /// needs human answers and a rating for each requested variant. Returns
    /// every problem found, not just the first.
    pub fn validate_for_scoring(&self, variants: &[Variant]) -> Vec<String> {
        let mut problems = Vec::new();
        let rated: HashSet<(&str, Variant)> = self
            .ratings
            .iter()
            .map(|r| (r.question_id.as_str(), r.variant))
            .collect();
        for question_id in self.manifest.questions.keys() {
            if self.human_record(question_id).is_none() {
                problems.push(format!("question `{question_id}` has no human answers"));
            }
            for &variant in variants {
                if !rated.contains(&(question_id.as_str(), variant)) {
                    problems.push(format!(
                        "question `{question_id}` has no rating for variant `{variant}`"
                    ));
                }
            }
        }
        problems
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_vote_strict_majority() {
        let votes: Vec<String> = ["yes", "yes", "no"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            majority_vote(&votes).unwrap(),
            ("yes".to_string(), 2, false)
        );
    }

    #[test]
    fn majority_vote_tie_breaks_lexicographically_and_flags() {
        let votes: Vec<String> = ["yes", "no"].iter().map(|s| s.to_string()).collect();
        assert_eq!(majority_vote(&votes).unwrap(), ("no".to_string(), 1, true));
    }

    #[test]
    fn majority_vote_unanimous_ten() {
        let votes = vec!["Stop.".to_string(); 10];
        assert_eq!(
            majority_vote(&votes).unwrap(),
            ("stop".to_string(), 10, false)
        );
    }

    #[test]
    fn majority_vote_normalizes_before_counting() {
        let votes: Vec<String> = ["No.", "no", "NO", "yes"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(majority_vote(&votes).unwrap(), ("no".to_string(), 3, false));
    }

    #[test]
    fn majority_vote_empty_is_an_error() {
        assert!(matches!(majority_vote(&[]), Err(CoreError::EmptyVote)));
    }

    #[test]
    fn majority_vote_is_order_insensitive() {
        let mut votes: Vec<String> = ["a", "b", "b", "c", "c"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let expected = majority_vote(&votes).unwrap();
        // Rotate through every cyclic permutation.
        for _ in 0..votes.len() {
            votes.rotate_left(1);
            assert_eq!(majority_vote(&votes).unwrap(), expected);
        }
        assert_eq!(expected, ("b".to_string(), 2, true));
    }

    #[test]
    fn camera_channel_has_six_values() {
        assert_eq!(CameraChannel::ALL.len(), 6);
        let names: HashSet<&str> = CameraChannel::ALL.iter().map(|c| c.as_str()).collect();
        assert_eq!(names.len(), 6);
    }
}
