//! Graph-Laplacian eigenspaces of submeshes: construction, dense reference
//! decomposition, shifted-inverse orthogonal iteration with warm starts,
//! dynamic subspace sizing and the graph Fourier transform.

mod angles;
mod cholesky;
mod dense;
mod dump;
mod laplacian;
mod oi;
mod qr;

pub use angles::{max_principal_angle, principal_angles};
pub use cholesky::EnvelopeCholesky;
pub use dense::{dense_eigendecomposition, symmetric_eigen, Spectrum, DEFAULT_DENSE_LIMIT};
pub use dump::{read_basis, write_basis};
pub use laplacian::{build_laplacian, Laplacian, Weighting};
pub use oi::{
    dynamic_oi, oi_step, orthogonal_iteration, DoiOutcome, DoiParams, DoiStatus,
    ShiftedInverseOperator, DEFAULT_RELATIVE_SHIFT,
};
pub use qr::{apply_sign_convention, orthonormalize, RANK_TOLERANCE};

use nalgebra::{DMatrix, DVector, Point3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Orthonormal `n_d × c` basis of a block's low-frequency subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    u: DMatrix<f64>,
}

impl SpectralBasis {
    /// Orthonormality tolerance accepted by [`SpectralBasis::new`].
    pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;

    /// Wraps a matrix whose columns are already orthonormal.
    pub fn new(u: DMatrix<f64>) -> Result<Self> {
        let c = u.ncols();
        let err = (u.transpose() * &u - DMatrix::identity(c, c)).norm();
        if !(err < Self::ORTHONORMAL_TOLERANCE) {
            return Err(Error::InvalidArgument(format!(
                "basis columns are not orthonormal (||UᵀU - I||_F = {err:e})"
            )));
        }
        Ok(SpectralBasis { u })
    }

    pub(crate) fn from_orthonormal(u: DMatrix<f64>) -> Self {
        SpectralBasis { u }
    }

    /// Orthonormalised Gaussian block, deterministic in `seed`.
    pub fn random(n_d: usize, c: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n_d, c, |_, _| StandardNormal.sample(&mut rng));
        Ok(SpectralBasis {
            u: orthonormalize(&g)?,
        })
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.u
    }

    #[inline]
    pub fn n_d(&self) -> usize {
        self.u.nrows()
    }

    #[inline]
    pub fn c(&self) -> usize {
        self.u.ncols()
    }

    /// `||UᵀU - I||_F`.
    pub fn orthonormality_error(&self) -> f64 {
        let c = self.c();
        (self.u.transpose() * &self.u - DMatrix::identity(c, c)).norm()
    }

    /// First `c` columns.
    pub fn truncated(&self, c: usize) -> Self {
        SpectralBasis {
            u: self.u.columns(0, c.min(self.c())).into_owned(),
        }
    }
}

/// Stacks block positions as an `n × 3` matrix.
pub fn coords_matrix(points: &[Point3<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), 3, |i, j| points[i][j])
}

pub fn matrix_to_points(m: &DMatrix<f64>) -> Vec<Point3<f64>> {
    (0..m.nrows())
        .map(|i| Point3::new(m[(i, 0)], m[(i, 1)], m[(i, 2)]))
        .collect()
}

/// Spectral coefficients `E = Uᵀ v` (c × 3).
pub fn gft(basis: &SpectralBasis, coords: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if coords.nrows() != basis.n_d() {
        return Err(Error::Dimension(format!(
            "signal has {} rows, basis has {}",
            coords.nrows(),
            basis.n_d()
        )));
    }
    Ok(basis.u.tr_mul(coords))
}

/// Synthesis `v = U E` (n_d × 3).
pub fn igft(basis: &SpectralBasis, coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if coeffs.nrows() != basis.c() {
        return Err(Error::Dimension(format!(
            "{} coefficient rows for a basis of size {}",
            coeffs.nrows(),
            basis.c()
        )));
    }
    Ok(&basis.u * coeffs)
}

/// Orthogonal projection `U Uᵀ v`.
pub fn project(basis: &SpectralBasis, coords: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    igft(basis, &gft(basis, coords)?)
}

/// Sum over the three axes of the projection residuals `v_j - U Uᵀ v_j`.
///
/// Signed components of different axes can cancel; see
/// [`axis_rms_residual`] for a norm that cannot.
pub fn summed_residual(basis: &SpectralBasis, coords: &DMatrix<f64>) -> Result<DVector<f64>> {
    let r = coords - project(basis, coords)?;
    Ok(r.column(0) + r.column(1) + r.column(2))
}

/// Root mean square of the per-axis projection residual over all `3·n_d` entries.
pub fn axis_rms_residual(basis: &SpectralBasis, coords: &DMatrix<f64>) -> Result<f64> {
    let r = coords - project(basis, coords)?;
    Ok((r.norm_squared() / r.len().max(1) as f64).sqrt())
}
