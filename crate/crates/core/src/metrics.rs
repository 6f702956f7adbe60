//! Scalar similarity and error metrics: cosine, MAE, RMSE, Pearson.

use crate::error::CoreError;

fn check_lengths(xs: &[f64], ys: &[f64]) -> Result<(), CoreError> {
    if xs.len() != ys.len() {
        return Err(CoreError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    Ok(())
}

/// Cosine similarity `dot(u,v) / (|u||v|)`, clamped to `[-1, 1]` against
/// rounding. Zero-magnitude vectors are an error.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, CoreError> {
    check_lengths(u, v)?;
    let mut dot = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for (&a, &b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(CoreError::ZeroMagnitudeEmbedding);
    }
    Ok((dot / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

/// Mean absolute error.
pub fn mae(xs: &[f64], ys: &[f64]) -> Result<f64, CoreError> {
    check_lengths(xs, ys)?;
    let sum: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - y).abs()).sum();
    Ok(sum / xs.len() as f64)
}

/// Root mean squared error.
pub fn rmse(xs: &[f64], ys: &[f64]) -> Result<f64, CoreError> {
    check_lengths(xs, ys)?;
    let sum: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - y) * (x - y)).sum();
    Ok((sum / xs.len() as f64).sqrt())
}

/// Sample Pearson correlation coefficient, in `[-1, 1]`.
///
/// Needs at least two points and nonzero variance on both sides; a constant
/// input has no defined correlation and is reported as an error rather than
/// a fabricated 0.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, CoreError> {
    check_lengths(xs, ys)?;
    if xs.len() < 2 {
        return Err(CoreError::TooFewPoints {
            needed: 2,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - x_mean;
        let dy = y - y_mean;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CoreError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_self_similarity_is_one() {
        let u = [1.0, 2.0, 3.0];
        assert!((cosine_similarity(&u, &u).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cosine_orthogonal_is_zero() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_hand_computed_value() {
        // dot = 32, |u| = sqrt(14), |v| = sqrt(77): 32 / sqrt(1078).
        let got = cosine_similarity(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((got - 32.0 / 1078.0_f64.sqrt()).abs() < 1e-12);
        assert!((got - 0.9746318461970762).abs() < 1e-12);
    }

    #[test]
    fn cosine_rejects_zero_vectors_and_length_mismatch() {
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(CoreError::ZeroMagnitudeEmbedding)
        ));
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 2.0]),
            Err(CoreError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn mae_basics() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(mae(&[], &[]), Err(CoreError::EmptyInput)));
    }

    #[test]
    fn rmse_basics() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        // sqrt((9 + 16) / 2) = sqrt(12.5)
        let got = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((got - 12.5_f64.sqrt()).abs() < 1e-12);
        assert!((got - 3.5355339059327378).abs() < 1e-12);
    }

    #[test]
    fn pearson_affine_and_negated() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 3.0).collect();
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-9);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn pearson_hand_computed_value() {
        // sxy = 10, sxx = 10, syy = 14.8: r = 10 / sqrt(148).
        let got = pearson(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 6.0]).unwrap();
        assert!((got - 10.0 / 148.0_f64.sqrt()).abs() < 1e-12);
        assert!((got - 0.8219949365267865).abs() < 1e-9);
    }

    #[test]
    fn pearson_rejects_constant_and_short_input() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(CoreError::ZeroVariance)
        ));
        assert!(matches!(
            pearson(&[1.0], &[2.0]),
            Err(CoreError::TooFewPoints { .. })
        ));
    }
}
