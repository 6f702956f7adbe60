//! Bit-exact binary serialization of detection batches.
//!
//! Layout (all integers little-endian, floats IEEE-754 binary32
//! little-endian, row-major):
//!
//! ```text
//! magic   b"ROIF"
//! version u16 (currently 1)
//! image   width u32, height u32
//! vocab   count u32, then per name: byte length u32 + UTF-8 bytes
//! columns five blocks in fixed order, each:
//!         column id u8, ndim u8, dims u32 x ndim, payload
//!         0 class_ids   [n]     u32 payload
//!         1 scores      [n]     f32 payload
//!         2 boxes       [n,4]   f32 payload
//!         3 norm_boxes  [n,4]   f32 payload
//!         4 roi         [n,d]   f32 payload
//! ```
//!
//! Readers never panic on malformed input: every failure is an error that
//! names what was being read and where.

use std::path::Path;

use crate::detection::{validate_detection_set, ClassVocabulary, DetectionSet};
use crate::error::CoreError;
use crate::tensor::TensorF32;

pub const DUMP_MAGIC: [u8; 4] = *b"ROIF";
pub const DUMP_VERSION: u16 = 1;

const COLUMN_NAMES: [&str; 5] = [
    "class_ids",
    "scores",
    "boxes",
    "normalized_boxes",
    "roi_features",
];

/// Serialize a batch and its vocabulary to bytes.
///
/// Invalid sets are refused: a dump that would not load back is never
/// produced.
pub fn dump_to_bytes(dets: &DetectionSet, vocab: &ClassVocabulary) -> Result<Vec<u8>, CoreError> {
    let report = validate_detection_set(dets, vocab);
    if let Some(v) = report.violations.first() {
        return Err(CoreError::Dump(format!(
            "refusing to save invalid set: {v}"
        )));
    }

    let n = dets.len();
    let d = dets.feature_width();
    let mut out = Vec::with_capacity(64 + n * (4 + 4 + 32 + d * 4));
    out.extend_from_slice(&DUMP_MAGIC);
    out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    out.extend_from_slice(&dets.image_size.0.to_le_bytes());
    out.extend_from_slice(&dets.image_size.1.to_le_bytes());

    out.extend_from_slice(&(vocab.len() as u32).to_le_bytes());
    for name in vocab.names() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }

    let write_header = |out: &mut Vec<u8>, id: u8, dims: &[usize]| {
        out.push(id);
        out.push(dims.len() as u8);
        for &dim in dims {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
    };

    write_header(&mut out, 0, &[n]);
    for &id in &dets.class_ids {
        out.extend_from_slice(&id.to_le_bytes());
    }
    write_header(&mut out, 1, &[n]);
    for &score in &dets.scores {
        out.extend_from_slice(&score.to_le_bytes());
    }
    for (id, tensor) in [
        (2u8, &dets.boxes),
        (3, &dets.normalized_boxes),
        (4, &dets.roi_features),
    ] {
        write_header(&mut out, id, tensor.shape());
        for &v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8], CoreError> {
        let remaining = self.bytes.len() - self.offset;
        if remaining < len {
            return Err(CoreError::Dump(format!(
                "payload length mismatch: need {len} bytes for {what} at offset {}, {remaining} left",
                self.offset
            )));
        }
        let slice = &self.bytes[self.offset..self.offset + len];
        self.offset += len;
        Ok(slice)
    }

    fn u8(&mut self, what: &str) -> Result<u8, CoreError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, CoreError> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32, CoreError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn read_column_header(
    cursor: &mut Cursor<'_>,
    expected_id: u8,
    expected_ndim: u8,
) -> Result<Vec<usize>, CoreError> {
    let name = COLUMN_NAMES[expected_id as usize];
    let id = cursor.u8("column id")?;
    if id != expected_id {
        return Err(CoreError::Dump(format!(
            "unexpected column id {id}, expected {expected_id} ({name})"
        )));
    }
    let ndim = cursor.u8("column rank")?;
    if ndim != expected_ndim {
        return Err(CoreError::Dump(format!(
            "dimension mismatch: column {name} has rank {ndim}, expected {expected_ndim}"
        )));
    }
    let mut dims = Vec::with_capacity(ndim as usize);
    for _ in 0..ndim {
        dims.push(cursor.u32("column dimension")? as usize);
    }
    Ok(dims)
}

fn element_count(dims: &[usize], name: &str) -> Result<usize, CoreError> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| {
            CoreError::Dump(format!(
                "dimension mismatch: column {name} dims {dims:?} overflow"
            ))
        })
}

fn read_f32_column(
    cursor: &mut Cursor<'_>,
    dims: Vec<usize>,
    name: &'static str,
) -> Result<TensorF32, CoreError> {
    let count = element_count(&dims, name)?;
    let len = count
        .checked_mul(4)
        .ok_or_else(|| CoreError::Dump(format!("dimension mismatch: column {name} too large")))?;
    let payload = cursor.take(len, name)?;
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    TensorF32::new(dims, data).map_err(|e| CoreError::Dump(format!("column {name}: {e}")))
}

/// Deserialize a batch and its vocabulary from bytes.
pub fn dump_from_bytes(bytes: &[u8]) -> Result<(DetectionSet, ClassVocabulary), CoreError> {
    let mut cursor = Cursor { bytes, offset: 0 };

    let magic = cursor.take(4, "magic")?;
    if magic != DUMP_MAGIC {
        return Err(CoreError::Dump(format!("bad magic {magic:?}")));
    }
    let version = cursor.u16("version")?;
    if version != DUMP_VERSION {
        return Err(CoreError::Dump(format!(
            "unsupported format version {version}"
        )));
    }
    let width = cursor.u32("image width")?;
    let height = cursor.u32("image height")?;

    let vocab_count = cursor.u32("vocabulary count")? as usize;
    let mut names = Vec::with_capacity(vocab_count.min(1 << 16));
    for i in 0..vocab_count {
        let len = cursor.u32("class name length")? as usize;
        let raw = cursor.take(len, "class name")?;
        let name = std::str::from_utf8(raw)
            .map_err(|_| CoreError::Dump(format!("invalid UTF-8 in class name {i}")))?;
        names.push(name.to_string());
    }
    let vocab = ClassVocabulary::new(names)
        .map_err(|e| CoreError::Dump(format!("vocabulary block: {e}")))?;

    let dims = read_column_header(&mut cursor, 0, 1)?;
    let n = dims[0];
    let payload = cursor.take(
        element_count(&dims, "class_ids")?
            .checked_mul(4)
            .ok_or_else(|| CoreError::Dump("dimension mismatch: class_ids too large".into()))?,
        "class_ids",
    )?;
    let class_ids: Vec<u32> = payload
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();

    let dims = read_column_header(&mut cursor, 1, 1)?;
    if dims[0] != n {
        return Err(CoreError::Dump(format!(
            "dimension mismatch: scores has {} rows, class_ids has {n}",
            dims[0]
        )));
    }
    let payload = cursor.take(n * 4, "scores")?;
    let scores: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(CoreError::Dump(format!(
            "column scores: non-finite value at row {i}"
        )));
    }

    let dims = read_column_header(&mut cursor, 2, 2)?;
    if dims != [n, 4] {
        return Err(CoreError::Dump(format!(
            "dimension mismatch: boxes dims {dims:?}, expected [{n}, 4]"
        )));
    }
    let boxes = read_f32_column(&mut cursor, dims, "boxes")?;

    let dims = read_column_header(&mut cursor, 3, 2)?;
    if dims != [n, 4] {
        return Err(CoreError::Dump(format!(
            "dimension mismatch: normalized_boxes dims {dims:?}, expected [{n}, 4]"
        )));
    }
    let normalized_boxes = read_f32_column(&mut cursor, dims, "normalized_boxes")?;

    let dims = read_column_header(&mut cursor, 4, 2)?;
    if dims[0] != n {
        return Err(CoreError::Dump(format!(
            "dimension mismatch: roi_features has {} rows, class_ids has {n}",
            dims[0]
        )));
    }
    let roi_features = read_f32_column(&mut cursor, dims, "roi_features")?;

    if cursor.offset != bytes.len() {
        return Err(CoreError::Dump(format!(
            "{} trailing bytes after last column",
            bytes.len() - cursor.offset
        )));
    }

    Ok((
        DetectionSet {
            class_ids,
            scores,
            boxes,
            normalized_boxes,
            roi_features,
            image_size: (width, height),
        },
        vocab,
    ))
}

/// Write a dump file. The byte image is built fully before any I/O, so a
/// failed save never leaves a partial file behind a successful return.
pub fn save_detection_dump(
    dets: &DetectionSet,
    vocab: &ClassVocabulary,
    path: &Path,
) -> Result<(), CoreError> {
    let bytes = dump_to_bytes(dets, vocab)?;
    std::fs::write(path, bytes).map_err(|e| CoreError::io(path, e))
}

/// Read a dump file.
pub fn load_detection_dump(path: &Path) -> Result<(DetectionSet, ClassVocabulary), CoreError> {
    let bytes = std::fs::read(path).map_err(|e| CoreError::io(path, e))?;
    dump_from_bytes(&bytes)
}
