//! Detection batches, the class vocabulary, and their validation.
//!
//! A [`DetectionSet`] is a columnar batch: five parallel columns (class ids,
//! scores, pixel boxes, normalized boxes, ROI features) sharing one leading
//! length. The columnar layout keeps filtering a pure index selection.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::CoreError;
use crate::tensor::TensorF32;
use crate::text::normalize_class;

/// Tolerance, in normalized units, for the boxes/normalized-boxes
/// consistency check.
pub const NORMALIZED_BOX_TOLERANCE: f64 = 1e-5;

/// The detector's class-id space: an ordered list of unique class names.
///
/// Names are matched case-insensitively after whitespace normalization, so
/// two names that collide under normalization are rejected as duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassVocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl ClassVocabulary {
    pub fn new<I, S>(names: I) -> Result<Self, CoreError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            let key = normalize_class(name);
            if key.is_empty() {
                return Err(CoreError::Vocabulary(format!("empty class name at {i}")));
            }
            if index.insert(key, i).is_some() {
                return Err(CoreError::Vocabulary(format!(
                    "duplicate class name `{name}`"
                )));
            }
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Name for a class id, if in range.
    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    /// Id for a name, matched on the normalized form.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(&normalize_class(name)).copied()
    }
}

/// One columnar detection batch, the filter's input and output.
///
/// Fields are public: a set may be assembled column by column (for instance
/// while decoding a dump) and only then checked with [`validate_detection_set`].
/// Invariant violations are data to report, not construction faults.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    /// Vocabulary indices, one per detection.
    pub class_ids: Vec<u32>,
    /// Confidence scores in `[0, 1]`, one per detection.
    pub scores: Vec<f32>,
    /// Pixel boxes, shape `[n, 4]`, corners `(x_min, y_min, x_max, y_max)`.
    pub boxes: TensorF32,
    /// Boxes scaled by `(1/width, 1/height)`, shape `[n, 4]`, in `[0, 1]`.
    pub normalized_boxes: TensorF32,
    /// Region-of-interest feature matrix, shape `[n, d]`.
    pub roi_features: TensorF32,
    /// Source image size in pixels, `(width, height)`.
    pub image_size: (u32, u32),
}

impl DetectionSet {
    /// Number of detections (leading length of the class-id column).
    pub fn len(&self) -> usize {
        self.class_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_ids.is_empty()
    }

    /// Feature width `d` of the ROI column.
    pub fn feature_width(&self) -> usize {
        self.roi_features.row_width()
    }

    /// Distinct normalized class names present in the batch.
    pub fn class_names(&self, vocab: &ClassVocabulary) -> BTreeSet<String> {
        self.class_ids
            .iter()
            .filter_map(|&id| vocab.name(id as usize))
            .map(normalize_class)
            .collect()
    }

    /// An empty batch with the given feature width and image size.
    pub fn empty(feature_width: usize, image_size: (u32, u32)) -> Self {
        Self {
            class_ids: Vec::new(),
            scores: Vec::new(),
            boxes: TensorF32::zeros(vec![0, 4]),
            normalized_boxes: TensorF32::zeros(vec![0, 4]),
            roi_features: TensorF32::zeros(vec![0, feature_width]),
            image_size,
        }
    }
}

/// One invariant violation found by [`validate_detection_set`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Which column the violation is in.
    pub column: &'static str,
    /// Offending row, when the violation is row-local.
    pub row: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.row {
            Some(row) => write!(f, "{}[{}]: {}", self.column, row, self.message),
            None => write!(f, "{}: {}", self.column, self.message),
        }
    }
}

/// Outcome of validating a [`DetectionSet`]: ok, or every violation found.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn violation(
    report: &mut ValidationReport,
    column: &'static str,
    row: Option<usize>,
    message: impl Into<String>,
) {
    report.violations.push(Violation {
        column,
        row,
        message: message.into(),
    });
}

/// Check every `DetectionSet` invariant, reporting all violations with the
/// column name and row index. Violations are data, not faults: the report is
/// `ok` iff the set is valid against `vocab`.
pub fn validate_detection_set(dets: &DetectionSet, vocab: &ClassVocabulary) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = dets.class_ids.len();

    for (column, tensor, width) in [
        ("boxes", &dets.boxes, Some(4usize)),
        ("normalized_boxes", &dets.normalized_boxes, Some(4)),
        ("roi_features", &dets.roi_features, None),
    ] {
        let shape = tensor.shape();
        if shape.len() != 2 {
            violation(
                &mut report,
                column,
                None,
                format!("expected rank-2 shape, got {shape:?}"),
            );
            continue;
        }
        if let Some(w) = width {
            if shape[1] != w {
                violation(
                    &mut report,
                    column,
                    None,
                    format!("expected width {w}, got {}", shape[1]),
                );
            }
        }
        if shape[0] != n {
            violation(
                &mut report,
                column,
                None,
                format!("column length mismatch: {} rows vs {n}", shape[0]),
            );
        }
    }
    if dets.scores.len() != n {
        violation(
            &mut report,
            "scores",
            None,
            format!("column length mismatch: {} rows vs {n}", dets.scores.len()),
        );
    }

    for (row, &id) in dets.class_ids.iter().enumerate() {
        if id as usize >= vocab.len() {
            violation(
                &mut report,
                "class_ids",
                Some(row),
                format!("class id {id} outside vocabulary of size {}", vocab.len()),
            );
        }
    }
    for (row, &score) in dets.scores.iter().enumerate() {
        if !score.is_finite() || !(0.0..=1.0).contains(&score) {
            violation(
                &mut report,
                "scores",
                Some(row),
                format!("score {score} outside [0,1]"),
            );
        }
    }

    let rows_ok = |t: &TensorF32| t.shape().len() == 2 && t.shape()[0] == n && t.shape()[1] == 4;
    if rows_ok(&dets.boxes) {
        for row in 0..n {
            let b = dets.boxes.row(row);
            if b[0] > b[2] || b[1] > b[3] {
                violation(
                    &mut report,
                    "boxes",
                    Some(row),
                    format!(
                        "corners out of order ({}, {}, {}, {})",
                        b[0], b[1], b[2], b[3]
                    ),
                );
            }
        }
    }
    if rows_ok(&dets.normalized_boxes) {
        for row in 0..n {
            let b = dets.normalized_boxes.row(row);
            if b.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                violation(
                    &mut report,
                    "normalized_boxes",
                    Some(row),
                    format!(
                        "value outside [0,1] in ({}, {}, {}, {})",
                        b[0], b[1], b[2], b[3]
                    ),
                );
            }
        }
    }

    let (width, height) = dets.image_size;
    if n > 0 && (width == 0 || height == 0) {
        violation(
            &mut report,
            "image_size",
            None,
            format!("degenerate image size {width}x{height}"),
        );
    } else if rows_ok(&dets.boxes) && rows_ok(&dets.normalized_boxes) {
        // Consistency between the two box columns, in normalized units.
        for row in 0..n {
            let b = dets.boxes.row(row);
            let nb = dets.normalized_boxes.row(row);
            let scale = [width as f64, height as f64, width as f64, height as f64];
            for corner in 0..4 {
                let expected = (b[corner] as f64 / scale[corner]).clamp(0.0, 1.0);
                if (nb[corner] as f64 - expected).abs() > NORMALIZED_BOX_TOLERANCE {
                    violation(
                        &mut report,
                        "normalized_boxes",
                        Some(row),
                        format!(
                            "corner {corner} is {} but boxes imply {expected}",
                            nb[corner]
                        ),
                    );
                    break;
                }
            }
        }
    }

    report
}

/// Scale pixel boxes by `(1/width, 1/height)` per corner, clamped to `[0,1]`.
///
/// Division runs in f64 before rounding to f32 storage.
pub fn derive_normalized_boxes(
    boxes: &TensorF32,
    image_size: (u32, u32),
) -> Result<TensorF32, CoreError> {
    let (width, height) = image_size;
    if width == 0 || height == 0 {
        return Err(CoreError::DegenerateImageSize { width, height });
    }
    let shape = boxes.shape();
    if shape.len() != 2 || shape[1] != 4 {
        return Err(CoreError::ShapeMismatch {
            shape: shape.to_vec(),
            len: boxes.data().len(),
        });
    }
    let scale = [width as f64, height as f64, width as f64, height as f64];
    let data: Vec<f32> = boxes
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| ((v as f64 / scale[i % 4]).clamp(0.0, 1.0)) as f32)
        .collect();
    TensorF32::new(shape.to_vec(), data)
}

/// The filter's configuration: a class whitelist plus a detection threshold.
///
/// Whitelist names are stored normalized. Whether every name exists in a
/// vocabulary is checked when the config is bound to one, in
/// [`crate::filter::apply_filter`].
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub whitelist: BTreeSet<String>,
    pub detection_threshold: f32,
}

impl FilterConfig {
    pub fn new<I, S>(whitelist: I, detection_threshold: f32) -> Result<Self, CoreError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if !(0.0..=1.0).contains(&detection_threshold) || !detection_threshold.is_finite() {
            return Err(CoreError::ThresholdOutOfRange(detection_threshold));
        }
        let whitelist = whitelist
            .into_iter()
            .map(|s| normalize_class(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        Ok(Self {
            whitelist,
            detection_threshold,
        })
    }

    /// The identity configuration for a vocabulary: every class, threshold 0.
    /// Filtering with it reproduces the input batch.
    pub fn identity(vocab: &ClassVocabulary) -> Self {
        Self {
            whitelist: vocab.names().iter().map(|n| normalize_class(n)).collect(),
            detection_threshold: 0.0,
        }
    }
}

/// Tensor-dimension profile of the surrounding VQA stack.
///
/// The mock backend only honors `max_detections` and `feature_width`; the
/// encoder widths are carried for contract checks on real-model adapters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineDims {
    pub max_detections: usize,
    pub feature_width: usize,
    pub box_width: usize,
    pub hidden_width: usize,
    pub intermediate_width: usize,
    pub answer_classes: usize,
}

impl Default for PipelineDims {
    fn default() -> Self {
        Self {
            max_detections: 36,
            feature_width: 2048,
            box_width: 4,
            hidden_width: 768,
            intermediate_width: 3072,
            answer_classes: 1536,
        }
    }
}

impl PipelineDims {
    pub fn validate(&self) -> Result<(), CoreError> {
        let fields = [
            ("max_detections", self.max_detections),
            ("feature_width", self.feature_width),
            ("box_width", self.box_width),
            ("hidden_width", self.hidden_width),
            ("intermediate_width", self.intermediate_width),
            ("answer_classes", self.answer_classes),
        ];
        for (name, value) in fields {
            if value == 0 {
                return Err(CoreError::Vocabulary(format!("{name} must be positive")));
            }
        }
        if self.feature_width <= self.hidden_width {
            return Err(CoreError::Vocabulary(format!(
                "feature_width {} must exceed hidden_width {}",
                self.feature_width, self.hidden_width
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_vocab() -> ClassVocabulary {
        ClassVocabulary::new(["car", "person", "tree", "sky"]).unwrap()
    }

    /// A hand-built valid 3-row set over `small_vocab`.
    fn valid_set() -> DetectionSet {
        let boxes = TensorF32::new(
            vec![3, 4],
            vec![
                0.0, 0.0, 160.0, 90.0, //
                400.0, 225.0, 800.0, 450.0, //
                0.0, 0.0, 0.0, 0.0,
            ],
        )
        .unwrap();
        let normalized = derive_normalized_boxes(&boxes, (1600, 900)).unwrap();
        DetectionSet {
            class_ids: vec![0, 1, 2],
            scores: vec![0.9, 0.5, 0.1],
            boxes,
            normalized_boxes: normalized,
            roi_features: TensorF32::zeros(vec![3, 8]),
            image_size: (1600, 900),
        }
    }

    #[test]
    fn vocabulary_lookup_round_trips() {
        let vocab = small_vocab();
        for (i, name) in vocab.names().to_vec().iter().enumerate() {
            assert_eq!(vocab.index_of(name), Some(i));
        }
        assert_eq!(vocab.index_of("CAR "), Some(0));
        assert_eq!(vocab.index_of("road"), None);
    }

    #[test]
    fn vocabulary_rejects_duplicates_and_empties() {
        assert!(ClassVocabulary::new(["car", "Car"]).is_err());
        assert!(ClassVocabulary::new(["car", ""]).is_err());
    }

    #[test]
    fn valid_set_validates_ok() {
        let report = validate_detection_set(&valid_set(), &small_vocab());
        assert!(
            report.is_ok(),
            "unexpected violations: {:?}",
            report.violations
        );
    }

    #[test]
    fn empty_set_validates_ok() {
        let report = validate_detection_set(&DetectionSet::empty(8, (1600, 900)), &small_vocab());
        assert!(report.is_ok());
    }

    #[test]
    fn truncated_column_reports_length_mismatch() {
        let mut set = valid_set();
        set.scores.truncate(2);
        let report = validate_detection_set(&set, &small_vocab());
        assert!(report
            .violations
            .iter()
            .any(|v| v.column == "scores" && v.message.contains("column length mismatch")));
    }

    #[test]
    fn out_of_range_values_are_reported_per_row() {
        let mut set = valid_set();
        set.scores[1] = 1.5;
        set.class_ids[2] = 99;
        let report = validate_detection_set(&set, &small_vocab());
        assert!(report
            .violations
            .iter()
            .any(|v| v.column == "scores" && v.row == Some(1)));
        assert!(report
            .violations
            .iter()
            .any(|v| v.column == "class_ids" && v.row == Some(2)));
    }

    #[test]
    fn swapped_corners_are_reported() {
        let mut set = valid_set();
        let mut data = set.boxes.data().to_vec();
        data.swap(0, 2); // x_min <-> x_max on row 0
        data[0] = 160.0;
        data[2] = 0.0;
        set.boxes = TensorF32::new(vec![3, 4], data).unwrap();
        let report = validate_detection_set(&set, &small_vocab());
        assert!(report
            .violations
            .iter()
            .any(|v| v.column == "boxes" && v.row == Some(0)));
    }

    #[test]
    fn inconsistent_normalized_boxes_are_reported() {
        let mut set = valid_set();
        let mut data = set.normalized_boxes.data().to_vec();
        data[5] += 0.01;
        set.normalized_boxes = TensorF32::new(vec![3, 4], data).unwrap();
        let report = validate_detection_set(&set, &small_vocab());
        assert!(report
            .violations
            .iter()
            .any(|v| v.column == "normalized_boxes" && v.row == Some(1)));
    }

    #[test]
    fn normalize_full_frame_and_zero_boxes() {
        let boxes = TensorF32::new(
            vec![2, 4],
            vec![0.0, 0.0, 1600.0, 900.0, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let normalized = derive_normalized_boxes(&boxes, (1600, 900)).unwrap();
        assert_eq!(normalized.row(0), &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(normalized.row(1), &[0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_quarter_box() {
        // 1600x900 frame, box at (400, 225, 800, 450).
        let boxes = TensorF32::new(vec![1, 4], vec![400.0, 225.0, 800.0, 450.0]).unwrap();
        let normalized = derive_normalized_boxes(&boxes, (1600, 900)).unwrap();
        assert_eq!(normalized.row(0), &[0.25, 0.25, 0.5, 0.5]);
    }

    #[test]
    fn normalize_rejects_degenerate_image() {
        let boxes = TensorF32::zeros(vec![1, 4]);
        let err = derive_normalized_boxes(&boxes, (0, 900)).unwrap_err();
        assert!(matches!(err, CoreError::DegenerateImageSize { .. }));
    }

    #[test]
    fn normalize_then_denormalize_reproduces_boxes() {
        // f32 storage of x/W rounds by up to ~W * 2^-25 per corner, so the
        // pixel-domain tolerance scales with the image dimension: 1e-5 in
        // normalized units.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xB0);
        for _ in 0..200 {
            let (w, h) = (rng.gen_range(1u32..4000), rng.gen_range(1u32..4000));
            let mut data = Vec::new();
            for _ in 0..8 {
                let mut xs = [
                    rng.gen_range(0.0f32..w as f32),
                    rng.gen_range(0.0f32..w as f32),
                ];
                let mut ys = [
                    rng.gen_range(0.0f32..h as f32),
                    rng.gen_range(0.0f32..h as f32),
                ];
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
                data.extend_from_slice(&[xs[0], ys[0], xs[1], ys[1]]);
            }
            let boxes = TensorF32::new(vec![8, 4], data).unwrap();
            let normalized = derive_normalized_boxes(&boxes, (w, h)).unwrap();
            let scale = [w as f64, h as f64, w as f64, h as f64];
            for (i, (&norm, &px)) in normalized.data().iter().zip(boxes.data()).enumerate() {
                let round_tripped = norm as f64 * scale[i % 4];
                let tolerance = 1e-5 * scale[i % 4];
                assert!(
                    (round_tripped - px as f64).abs() <= tolerance,
                    "corner {i}: {round_tripped} vs {px} (image {w}x{h})"
                );
            }
        }
    }

    #[test]
    fn filter_config_threshold_range() {
        assert!(FilterConfig::new(["car"], 1.1).is_err());
        assert!(FilterConfig::new(["car"], -0.1).is_err());
        assert!(FilterConfig::new(["car"], f32::NAN).is_err());
        let cfg = FilterConfig::new(["  Car "], 0.5).unwrap();
        assert!(cfg.whitelist.contains("car"));
    }

    #[test]
    fn default_dims_match_the_deployed_profile() {
        let dims = PipelineDims::default();
        dims.validate().unwrap();
        assert_eq!(dims.max_detections, 36);
        assert_eq!(dims.feature_width, 2048);
        assert_eq!(dims.box_width, 4);
        assert_eq!(dims.hidden_width, 768);
        assert_eq!(dims.intermediate_width, 4 * dims.hidden_width);
        assert_eq!(dims.answer_classes, 1536);
    }
}
