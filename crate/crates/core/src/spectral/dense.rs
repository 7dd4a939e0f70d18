use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::qr::apply_sign_convention;
use super::{Laplacian, SpectralBasis};
use crate::error::{Error, Result};

/// Largest block the dense oracle accepts unless told otherwise.
pub const DEFAULT_DENSE_LIMIT: usize = 4096;

/// Full eigendecomposition `L = U Λ Uᵀ`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvectors of the `c` smallest eigenvalues.
    pub fn bottom(&self, c: usize) -> Result<SpectralBasis> {
        if c == 0 || c > self.len() {
            return Err(Error::InvalidArgument(format!(
                "c = {c} outside 1..={}",
                self.len()
            )));
        }
        Ok(SpectralBasis::from_orthonormal(
            self.eigenvectors.columns(0, c).into_owned(),
        ))
    }
}

/// Ascending eigendecomposition of a dense symmetric matrix with the
/// largest-entry-positive sign convention on each eigenvector.
pub fn symmetric_eigen(m: DMatrix<f64>) -> Result<Spectrum> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!(
            "{}×{} matrix is not square",
            n,
            m.ncols()
        )));
    }
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    apply_sign_convention(&mut eigenvectors);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Dense reference decomposition of a block Laplacian.
pub fn dense_eigendecomposition(lap: &Laplacian, limit: usize) -> Result<Spectrum> {
    if lap.size() > limit {
        return Err(Error::InvalidArgument(format!(
            "block of {} vertices exceeds the dense limit {limit}",
            lap.size()
        )));
    }
    symmetric_eigen(lap.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Weighting;
    use approx::assert_relative_eq;
    use nalgebra::Point3;

    fn path(n: usize) -> Laplacian {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < n {
                    v.push(i + 1);
                }
                v
            })
            .collect();
        let pos: Vec<_> = (0..n).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        Laplacian::from_adjacency(&adj, &pos, Weighting::InverseSquaredDistance).unwrap()
    }

    #[test]
    fn single_edge() {
        let s = dense_eigendecomposition(&path(2), DEFAULT_DENSE_LIMIT).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(s.eigenvalues[1], 2.0, epsilon = 1e-14);
        let h = 0.5f64.sqrt();
        assert_relative_eq!(s.eigenvectors[(0, 0)], h, epsilon = 1e-14);
        assert_relative_eq!(s.eigenvectors[(1, 0)], h, epsilon = 1e-14);
    }

    #[test]
    fn path_of_three_edges() {
        // Path Laplacian on 4 vertices: λ_k = 2 - 2cos(kπ/4).
        let s = dense_eigendecomposition(&path(4), DEFAULT_DENSE_LIMIT).unwrap();
        for k in 0..4 {
            let expected = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / 4.0).cos();
            assert_relative_eq!(s.eigenvalues[k], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn decomposition_contract() {
        let lap = path(60);
        let s = dense_eigendecomposition(&lap, DEFAULT_DENSE_LIMIT).unwrap();
        let u = &s.eigenvectors;
        assert!((u.transpose() * u - DMatrix::identity(60, 60)).norm() < 1e-10);
        let l = lap.to_dense();
        let resid = &l * u - u * DMatrix::from_diagonal(&s.eigenvalues);
        assert!(resid.norm() < 1e-8 * l.norm());
        assert!(s.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
        assert!(s.eigenvalues[0] >= -1e-10);
    }

    #[test]
    fn limit_enforced() {
        assert!(dense_eigendecomposition(&path(10), 9).is_err());
    }
}
