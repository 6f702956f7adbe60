//! Dense row-major tensors of finite `f32` values.

use crate::error::CoreError;

/// A validated tensor: row-major `f32` data with an explicit shape.
///
/// Construction enforces that the element count equals the product of the
/// dimensions and that every element is finite. Zero-sized dimensions are
/// allowed so that empty detection batches (shape `[0, 4]` boxes and the
/// like) are first-class values.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorF32 {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl TensorF32 {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, CoreError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(CoreError::ShapeMismatch {
                shape,
                len: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite { index });
        }
        Ok(Self { shape, data })
    }

    /// An all-zero tensor of the given shape.
    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Leading dimension, or 0 for rank-0 tensors.
    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    /// Elements per row (product of all trailing dimensions).
    pub fn row_width(&self) -> usize {
        if self.shape.len() <= 1 {
            1
        } else {
            self.shape[1..].iter().product()
        }
    }

    /// One row of a rank >= 1 tensor.
    ///
    /// Panics if `index` is out of bounds, like slice indexing.
    pub fn row(&self, index: usize) -> &[f32] {
        let w = self.row_width();
        &self.data[index * w..(index + 1) * w]
    }

    /// Gather rows along the leading dimension, in the order given.
    ///
    /// Selected rows are copied bit-exactly; the trailing dimensions are
    /// preserved. Panics if any index is out of bounds.
    pub fn select_rows(&self, indices: &[usize]) -> TensorF32 {
        let w = self.row_width();
        let mut data = Vec::with_capacity(indices.len() * w);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        let mut shape = self.shape.clone();
        if shape.is_empty() {
            shape = vec![indices.len()];
        } else {
            shape[0] = indices.len();
        }
        TensorF32 { shape, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_checks_shape_product() {
        let err = TensorF32::new(vec![2, 3], vec![0.0; 5]).unwrap_err();
        assert!(matches!(err, CoreError::ShapeMismatch { .. }));
        assert!(TensorF32::new(vec![2, 3], vec![0.0; 6]).is_ok());
    }

    #[test]
    fn new_rejects_non_finite() {
        let err = TensorF32::new(vec![3], vec![1.0, f32::NAN, 2.0]).unwrap_err();
        assert!(matches!(err, CoreError::NonFinite { index: 1 }));
        let err = TensorF32::new(vec![2], vec![f32::INFINITY, 0.0]).unwrap_err();
        assert!(matches!(err, CoreError::NonFinite { index: 0 }));
    }

    #[test]
    fn zero_sized_dimensions_are_valid() {
        let t = TensorF32::new(vec![0, 4], vec![]).unwrap();
        assert_eq!(t.rows(), 0);
        assert_eq!(t.row_width(), 4);
    }

    #[test]
    fn select_rows_gathers_in_order() {
        let t = TensorF32::new(vec![3, 2], vec![0.0, 1.0, 10.0, 11.0, 20.0, 21.0]).unwrap();
        let s = t.select_rows(&[2, 0]);
        assert_eq!(s.shape(), &[2, 2]);
        assert_eq!(s.data(), &[20.0, 21.0, 0.0, 1.0]);
        let empty = t.select_rows(&[]);
        assert_eq!(empty.shape(), &[0, 2]);
    }
}
