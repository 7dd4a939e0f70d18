use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn check(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "subspaces of shape {:?} and {:?} are not comparable",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Principal angles (radians, ascending) between the column spans of two
/// orthonormal matrices of the same shape.
///
/// Cosines come from `σ(AᵀB)` and sines from `σ(A - B BᵀA)`; pairing them
/// through `atan2` keeps small and near-right angles accurate.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    check(a, b)?;
    let mut cos: Vec<f64> = (a.transpose() * b)
        .singular_values()
        .iter()
        .copied()
        .collect();
    let resid = a - b * (b.transpose() * a);
    let mut sin: Vec<f64> = resid.singular_values().iter().copied().collect();
    cos.sort_by(|x, y| y.total_cmp(x));
    sin.sort_by(|x, y| x.total_cmp(y));
    Ok(cos.iter().zip(&sin).map(|(c, s)| s.atan2(*c)).collect())
}

/// Largest principal angle, `asin σ_max(A - B BᵀA)`.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    check(a, b)?;
    if a.ncols() == 0 {
        return Ok(0.0);
    }
    let resid = a - b * (b.transpose() * a);
    let s = resid.singular_values().max();
    Ok(s.clamp(0.0, 1.0).asin())
}
