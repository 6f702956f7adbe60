//! The human-guided feature filter.
//!
//! Prunes a detection batch to whitelisted classes at or above a confidence
//! threshold. All five columns are selected by the same index set, so kept
//! rows are bit-exact copies of input rows in their original relative order,
//! and the trace records exactly which rows survived.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::{ClassVocabulary, DetectionSet, FilterConfig};
use crate::error::CoreError;
use crate::text::normalize_class;

/// Default confidence threshold when a config does not override it.
pub const DEFAULT_DETECTION_THRESHOLD: f32 = 0.5;

const CANONICAL_WHITELIST: &str = include_str!("../data/driving_whitelist.txt");

/// Which input rows survived a filter application.
///
/// `kept_indices` is strictly increasing; together with `dropped_indices` it
/// partitions `0..input_count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterTrace {
    pub kept_indices: Vec<usize>,
    pub dropped_indices: Vec<usize>,
    pub input_count: usize,
    pub output_count: usize,
}

/// Run the filter: keep row `i` iff its class name is whitelisted and
/// `scores[i] >= detection_threshold` (inclusive, so a row at an exactly
/// configured operating point survives).
///
/// Fails fast with [`CoreError::UnknownWhitelistClass`] if any whitelist
/// name is absent from `vocab`; no rows are inspected in that case.
pub fn apply_filter(
    dets: &DetectionSet,
    cfg: &FilterConfig,
    vocab: &ClassVocabulary,
) -> Result<(DetectionSet, FilterTrace), CoreError> {
    let mut allowed_ids: HashSet<u32> = HashSet::with_capacity(cfg.whitelist.len());
    for name in &cfg.whitelist {
        match vocab.index_of(name) {
            Some(id) => {
                allowed_ids.insert(id as u32);
            }
            None => return Err(CoreError::UnknownWhitelistClass(name.clone())),
        }
    }

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, (&id, &score)) in dets.class_ids.iter().zip(&dets.scores).enumerate() {
        if allowed_ids.contains(&id) && score >= cfg.detection_threshold {
            kept.push(i);
        } else {
            dropped.push(i);
        }
    }

    let filtered = DetectionSet {
        class_ids: kept.iter().map(|&i| dets.class_ids[i]).collect(),
        scores: kept.iter().map(|&i| dets.scores[i]).collect(),
        boxes: dets.boxes.select_rows(&kept),
        normalized_boxes: dets.normalized_boxes.select_rows(&kept),
        roi_features: dets.roi_features.select_rows(&kept),
        image_size: dets.image_size,
    };
    let trace = FilterTrace {
        output_count: kept.len(),
        input_count: dets.len(),
        kept_indices: kept,
        dropped_indices: dropped,
    };
    Ok((filtered, trace))
}

/// Parse a whitelist file body: one class name per line, `#` starts a
/// comment, names normalized, duplicates dropped while preserving order.
pub fn parse_whitelist(text: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut names = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        let name = normalize_class(line);
        if !name.is_empty() && seen.insert(name.clone()) {
            names.push(name);
        }
    }
    names
}

/// Load a whitelist from a UTF-8 text file.
pub fn load_whitelist(path: &Path) -> Result<Vec<String>, CoreError> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    Ok(parse_whitelist(&text))
}

/// The canonical driving whitelist shipped with the crate.
pub fn canonical_driving_whitelist() -> Vec<String> {
    parse_whitelist(CANONICAL_WHITELIST)
}

/// Bind the canonical driving whitelist to a vocabulary.
///
/// Returns the config (canonical names intersected with `vocab`, default
/// threshold) plus a warning for each canonical name the vocabulary lacks.
/// An empty intersection is an error: the filter would drop everything.
pub fn driving_whitelist(
    vocab: &ClassVocabulary,
) -> Result<(FilterConfig, Vec<String>), CoreError> {
    let canonical = canonical_driving_whitelist();
    let mut present = Vec::new();
    let mut warnings = Vec::new();
    for name in canonical {
        if vocab.index_of(&name).is_some() {
            present.push(name);
        } else {
            warnings.push(format!("whitelist class `{name}` not in vocabulary"));
        }
    }
    if present.is_empty() {
        return Err(CoreError::WhitelistDisjoint);
    }
    let cfg = FilterConfig::new(present, DEFAULT_DETECTION_THRESHOLD)?;
    Ok((cfg, warnings))
}
