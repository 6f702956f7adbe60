//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by loaders, metrics, and pipeline operations.
///
/// Data-quality findings that are expected in normal operation (an invalid
/// detection batch, say) are reported as values, not errors; see
/// [`crate::detection::ValidationReport`]. `CoreError` is reserved for
/// contract violations and unreadable input.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("tensor shape {shape:?} does not match data length {len}")]
    ShapeMismatch { shape: Vec<usize>, len: usize },

    #[error("tensor contains non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("vocabulary error: {0}")]
    Vocabulary(String),

    #[error("degenerate image size {width}x{height}")]
    DegenerateImageSize { width: u32, height: u32 },

    #[error("detection threshold {0} out of range [0,1]")]
    ThresholdOutOfRange(f32),

    #[error("unknown whitelist class `{0}`")]
    UnknownWhitelistClass(String),

    #[error("whitelist disjoint from vocabulary")]
    WhitelistDisjoint,

    #[error("empty answer vocabulary")]
    EmptyAnswerVocabulary,

    #[error("invalid answer distribution: {0}")]
    InvalidDistribution(String),

    #[error("filtered variant requires a filter config")]
    MissingFilterConfig,

    #[error("zero-magnitude embedding for input text")]
    ZeroMagnitudeEmbedding,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("empty text cannot be scored")]
    EmptyText,

    #[error("zero variance")]
    ZeroVariance,

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("no consensus answer for question `{0}`")]
    MissingConsensus(String),

    #[error("no human rating for question `{question_id}` variant `{variant}`")]
    MissingRating {
        question_id: String,
        variant: String,
    },

    #[error("majority vote over an empty answer list")]
    EmptyVote,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dangling question_id `{question_id}` in {path}")]
    DanglingQuestion { question_id: String, path: PathBuf },

    #[error("duplicate id `{id}` in {path}")]
    DuplicateId { id: String, path: PathBuf },

    #[error("detection dump: {0}")]
    Dump(String),

    #[error("backend error: {0}")]
    Backend(String),

    #[error("embedding provider error: {0}")]
    Provider(String),
}

impl CoreError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        CoreError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True when the error stems from the execution environment rather than
    /// from the input data. CLI commands map this to a distinct exit code.
    pub fn is_environment(&self) -> bool {
        matches!(self, CoreError::Io { .. })
    }
}
