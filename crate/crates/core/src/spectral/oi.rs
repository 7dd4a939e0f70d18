use nalgebra::DMatrix;

use super::qr::orthonormalize;
use super::{summed_residual, EnvelopeCholesky, Laplacian, SpectralBasis};
use crate::error::{Error, Result};
use crate::mesh::bbox_diagonal;

/// Default shift relative to the mean diagonal of `L`.
///
/// The null vector of `L` is amplified by `δ^-z` against `(λ_c + δ)^-z` for
/// the rest of the block, so a much smaller shift leaves `R^z U` numerically
/// rank deficient for `z ≥ 2` and moderately large `c`.
pub const DEFAULT_RELATIVE_SHIFT: f64 = 1e-3;

/// `R^z` with `R = (L + δI)⁻¹`, applied through a sparse Cholesky factor.
#[derive(Debug, Clone)]
pub struct ShiftedInverseOperator {
    factor: EnvelopeCholesky,
    delta: f64,
    z: u32,
}

impl ShiftedInverseOperator {
    pub fn new(lap: &Laplacian, delta: f64, z: u32) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "shift must be positive, got {delta}"
            )));
        }
        if z == 0 {
            return Err(Error::InvalidArgument("power z must be at least 1".into()));
        }
        Ok(ShiftedInverseOperator {
            factor: EnvelopeCholesky::factor(lap, delta)?,
            delta,
            z,
        })
    }

    /// `DEFAULT_RELATIVE_SHIFT·trace/n_d`; see [`Self::shift_for`].
    pub fn default_shift(lap: &Laplacian) -> f64 {
        Self::shift_for(lap, DEFAULT_RELATIVE_SHIFT)
    }

    /// `relative·trace/n_d`, raised by the Gershgorin deficit when a
    /// distance-weighted `L` is not diagonally dominant.
    pub fn shift_for(lap: &Laplacian, relative: f64) -> f64 {
        let base = relative * lap.trace() / lap.size() as f64;
        let deficit = (-lap.gershgorin_lower_bound()).max(0.0);
        if deficit > 0.0 {
            deficit * (1.0 + 1e-8) + base
        } else {
            base
        }
    }

    /// Operator with [`Self::default_shift`].
    pub fn with_default_shift(lap: &Laplacian, z: u32) -> Result<Self> {
        Self::new(lap, Self::default_shift(lap), z)
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.factor.size()
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn z(&self) -> u32 {
        self.z
    }

    /// `R B`, a single solve per column.
    pub fn apply_once(&self, block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.apply_power(block, 1)
    }

    /// `R^z B`.
    pub fn apply(&self, block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.apply_power(block, self.z)
    }

    fn apply_power(&self, block: &DMatrix<f64>, z: u32) -> Result<DMatrix<f64>> {
        if block.nrows() != self.size() {
            return Err(Error::Dimension(format!(
                "block has {} rows, operator has size {}",
                block.nrows(),
                self.size()
            )));
        }
        let mut out = block.clone();
        for mut col in out.column_iter_mut() {
            let x = col.as_mut_slice();
            for _ in 0..z {
                self.factor.solve_in_place(x);
            }
        }
        Ok(out)
    }
}

/// One update `Onorm(R^z U)`.
///
/// If `R^z U` is too ill-conditioned to orthonormalize, the same subspace is
/// reached by orthonormalizing after each of the `z` solves.
pub fn oi_step(op: &ShiftedInverseOperator, u: &SpectralBasis) -> Result<SpectralBasis> {
    match orthonormalize(&op.apply(u.matrix())?) {
        Ok(q) => Ok(SpectralBasis::from_orthonormal(q)),
        Err(Error::RankDeficient { .. }) if op.z > 1 => {
            let mut q = u.matrix().clone();
            for _ in 0..op.z {
                q = orthonormalize(&op.apply_once(&q)?)?;
            }
            Ok(SpectralBasis::from_orthonormal(q))
        }
        Err(e) => Err(e),
    }
}

/// `t_max` orthogonal-iteration updates starting from `init`.
pub fn orthogonal_iteration(
    op: &ShiftedInverseOperator,
    init: &SpectralBasis,
    t_max: usize,
) -> Result<SpectralBasis> {
    if init.n_d() != op.size() {
        return Err(Error::Dimension(format!(
            "initial basis has {} rows, operator has size {}",
            init.n_d(),
            op.size()
        )));
    }
    let mut u = init.clone();
    for _ in 0..t_max {
        u = oi_step(op, &u)?;
    }
    Ok(u)
}

/// Residual band and size limits for [`dynamic_oi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoiParams {
    /// Lower residual bound, relative to the block's bounding-box diagonal.
    pub eps_l: f64,
    /// Upper residual bound, relative to the block's bounding-box diagonal.
    pub eps_h: f64,
    pub c_min: usize,
    pub c_max: usize,
    pub t_max: usize,
}

impl DoiParams {
    pub fn validate(&self, n_d: usize) -> Result<()> {
        if !(0.0 < self.eps_l && self.eps_l < self.eps_h) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < eps_l < eps_h, got ({}, {})",
                self.eps_l, self.eps_h
            )));
        }
        if self.c_min == 0 || self.c_min > self.c_max || self.c_max > n_d {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= c_min <= c_max <= n_d, got {} / {} / {n_d}",
                self.c_min, self.c_max
            )));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidArgument("t_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why [`dynamic_oi`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoiStatus {
    /// Residual inside `(eps_l, eps_h)`.
    InBand,
    /// Residual below `eps_l` with `c = c_min`.
    AtMinBound,
    /// Residual above `eps_h` with `c = c_max`: unconverged.
    AtMaxBound,
    /// Ran out of iterations while still adjusting `c`.
    IterationLimit,
}

impl DoiStatus {
    /// Terminated inside the band or at a size bound.
    pub fn settled(self) -> bool {
        !matches!(self, DoiStatus::IterationLimit)
    }
}

#[derive(Debug, Clone)]
pub struct DoiOutcome {
    pub basis: SpectralBasis,
    pub status: DoiStatus,
    pub iterations: usize,
    /// Final `||e||₂` in model units.
    pub residual: f64,
    /// Absolute band `(eps_l, eps_h)·diag` actually used.
    pub band: (f64, f64),
    /// `(c, ||e||₂)` after every OI step.
    pub history: Vec<(usize, f64)>,
}

/// OI with residual-driven subspace sizing: grow by the normalised summed
/// residual while `||e||₂ > eps_h`, drop the last column while `< eps_l`.
pub fn dynamic_oi(
    op: &ShiftedInverseOperator,
    init: &SpectralBasis,
    coords: &DMatrix<f64>,
    params: &DoiParams,
) -> Result<DoiOutcome> {
    let n_d = op.size();
    params.validate(n_d)?;
    if init.n_d() != n_d || coords.nrows() != n_d || coords.ncols() != 3 {
        return Err(Error::Dimension(format!(
            "operator size {n_d}, basis {}×{}, coords {}×{}",
            init.n_d(),
            init.c(),
            coords.nrows(),
            coords.ncols()
        )));
    }
    if init.c() < params.c_min || init.c() > params.c_max {
        return Err(Error::InvalidArgument(format!(
            "initial c = {} outside [{}, {}]",
            init.c(),
            params.c_min,
            params.c_max
        )));
    }
    let points = super::matrix_to_points(coords);
    let diag = bbox_diagonal(&points).max(f64::MIN_POSITIVE);
    let (lo, hi) = (params.eps_l * diag, params.eps_h * diag);

    let mut u = init.clone();
    let mut history = Vec::new();
    let mut status = DoiStatus::IterationLimit;
    let mut residual = f64::NAN;
    let mut iterations = 0;
    for _ in 0..params.t_max {
        u = oi_step(op, &u)?;
        iterations += 1;
        let e = summed_residual(&u, coords)?;
        residual = e.norm();
        history.push((u.c(), residual));
        if residual > hi {
            if u.c() >= params.c_max {
                status = DoiStatus::AtMaxBound;
                break;
            }
            let mut grown = u.matrix().clone().insert_column(u.c(), 0.0);
            grown.set_column(u.c(), &(e / residual));
            u = match orthonormalize(&grown) {
                Ok(q) => SpectralBasis::from_orthonormal(q),
                // The residual is numerically inside span(U); nothing left to add.
                Err(Error::RankDeficient { .. }) => {
                    status = DoiStatus::AtMaxBound;
                    break;
                }
                Err(other) => return Err(other),
            };
        } else if residual < lo {
            if u.c() <= params.c_min {
                status = DoiStatus::AtMinBound;
                break;
            }
            u = u.truncated(u.c() - 1);
        } else {
            status = DoiStatus::InBand;
            break;
        }
    }
    Ok(DoiOutcome {
        basis: u,
        status,
        iterations,
        residual,
        band: (lo, hi),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_edges, shapes, Mesh};
    use crate::spectral::{
        coords_matrix, dense_eigendecomposition, max_principal_angle, Weighting,
    };
    use approx::assert_relative_eq;
    use nalgebra::Point3;
    use proptest::prelude::*;

    fn mesh_laplacian(mesh: &Mesh, w: Weighting) -> Laplacian {
        let e = build_edges(mesh);
        let adj: Vec<Vec<usize>> = (0..mesh.vertex_count())
            .map(|i| e.neighbors(i).to_vec())
            .collect();
        Laplacian::from_adjacency(&adj, mesh.vertices(), w).unwrap()
    }

    fn edge_laplacian() -> Laplacian {
        Laplacian::from_adjacency(
            &[vec![1], vec![0]],
            &[Point3::origin(), Point3::new(1.0, 0.0, 0.0)],
            Weighting::Binary,
        )
        .unwrap()
    }

    #[test]
    fn two_by_two_action() {
        let op = ShiftedInverseOperator::new(&edge_laplacian(), 1.0, 1).unwrap();
        let r = op
            .apply(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0]))
            .unwrap();
        assert_relative_eq!(r[(0, 0)], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(r[(1, 0)], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn power_is_composition() {
        let lap = mesh_laplacian(&shapes::grid(8, 8), Weighting::Binary);
        let op1 = ShiftedInverseOperator::new(&lap, 0.3, 1).unwrap();
        let op2 = ShiftedInverseOperator::new(&lap, 0.3, 2).unwrap();
        let b = SpectralBasis::random(64, 3, 7).unwrap().into_matrix();
        let twice = op1.apply(&op1.apply(&b).unwrap()).unwrap();
        assert!((op2.apply(&b).unwrap() - twice).norm() < 1e-12);
    }

    #[test]
    fn operator_spectrum_matches_oracle() {
        let mesh = shapes::bumpy(&shapes::grid(10, 5), 0.3, 2, 1);
        let lap = mesh_laplacian(&mesh, Weighting::Binary);
        let delta = 0.05;
        let op = ShiftedInverseOperator::new(&lap, delta, 1).unwrap();
        let r = op.apply_once(&DMatrix::identity(50, 50)).unwrap();
        let r = (&r + r.transpose()) * 0.5;
        let rs = crate::spectral::symmetric_eigen(r).unwrap();
        let ls = dense_eigendecomposition(&lap, 4096).unwrap();
        for i in 0..50 {
            // Largest eigenvalues of R pair with the smallest of L.
            let expected = 1.0 / (ls.eigenvalues[i] + delta);
            assert_relative_eq!(rs.eigenvalues[49 - i], expected, max_relative = 1e-8);
        }
        let top_r = rs.eigenvectors.columns(49, 1).into_owned();
        let bottom_l = ls.eigenvectors.columns(0, 1).into_owned();
        assert!(max_principal_angle(&top_r, &bottom_l).unwrap() < 1e-8);
    }

    #[test]
    fn default_shift_keeps_weighted_laplacian_positive_definite() {
        // Short edges make the distance-weighted L indefinite.
        let mesh = shapes::rescale(&shapes::icosphere(2), 0.1);
        let lap = mesh_laplacian(&mesh, Weighting::InverseSquaredDistance);
        assert!(lap.gershgorin_lower_bound() < 0.0);
        let op = ShiftedInverseOperator::with_default_shift(&lap, 2).unwrap();
        assert!(op.delta() > 0.0);
        let binary = mesh_laplacian(&mesh, Weighting::Binary);
        let d = ShiftedInverseOperator::default_shift(&binary);
        assert_relative_eq!(
            d,
            DEFAULT_RELATIVE_SHIFT * binary.trace() / binary.size() as f64
        );
        let tiny = ShiftedInverseOperator::shift_for(&binary, 1e-8);
        assert_relative_eq!(tiny, 1e-8 * binary.trace() / binary.size() as f64);
    }

    #[test]
    fn invalid_arguments() {
        let lap = edge_laplacian();
        assert!(ShiftedInverseOperator::new(&lap, 0.0, 1).is_err());
        assert!(ShiftedInverseOperator::new(&lap, 1.0, 0).is_err());
        let op = ShiftedInverseOperator::new(&lap, 1.0, 1).unwrap();
        let wrong = SpectralBasis::random(3, 1, 0).unwrap();
        assert!(orthogonal_iteration(&op, &wrong, 1).is_err());
    }

    #[test]
    fn exact_eigenvectors_are_a_fixed_point() {
        let lap = mesh_laplacian(&shapes::icosphere(2), Weighting::Binary);
        let s = dense_eigendecomposition(&lap, 4096).unwrap();
        let op = ShiftedInverseOperator::with_default_shift(&lap, 2).unwrap();
        // c = 4 sits at the gap between the l=1 and l=2 sphere harmonics.
        let init = s.bottom(4).unwrap();
        let out = orthogonal_iteration(&op, &init, 3).unwrap();
        assert!(max_principal_angle(out.matrix(), init.matrix()).unwrap() < 1e-10);
    }

    #[test]
    fn random_start_converges_to_oracle() {
        let mesh = shapes::bumpy(&shapes::grid(20, 10), 0.5, 3, 4);
        let lap = mesh_laplacian(&mesh, Weighting::Binary);
        let s = dense_eigendecomposition(&lap, 4096).unwrap();
        let c = 8;
        assert!((s.eigenvalues[c - 1] + 1e-6) / (s.eigenvalues[c] + 1e-6) < 0.95);
        let op = ShiftedInverseOperator::with_default_shift(&lap, 2).unwrap();
        let out =
            orthogonal_iteration(&op, &SpectralBasis::random(200, c, 11).unwrap(), 300).unwrap();
        let angle = max_principal_angle(out.matrix(), s.bottom(c).unwrap().matrix()).unwrap();
        assert!(angle < 1e-6, "{angle}");
    }

    #[test]
    fn tiny_shift_high_power_still_tracks_subspace() {
        let mesh = shapes::bumpy(&shapes::grid(20, 10), 0.5, 3, 4);
        let lap = mesh_laplacian(&mesh, Weighting::Binary);
        let s = dense_eigendecomposition(&lap, 4096).unwrap();
        let op =
            ShiftedInverseOperator::new(&lap, ShiftedInverseOperator::shift_for(&lap, 1e-8), 4)
                .unwrap();
        let out =
            orthogonal_iteration(&op, &SpectralBasis::random(200, 40, 2).unwrap(), 200).unwrap();
        assert!(out.orthonormality_error() < 1e-10);
        let c = (1..40)
            .rev()
            .find(|&c| s.eigenvalues[c - 1] < 0.9 * s.eigenvalues[c])
            .unwrap();
        let angle = max_principal_angle(
            &out.truncated(c).into_matrix(),
            s.bottom(c).unwrap().matrix(),
        )
        .unwrap();
        assert!(angle < 1e-4, "{angle}");
    }

    #[test]
    fn output_is_bit_stable() {
        let lap = mesh_laplacian(&shapes::torus(12, 8, 2.0, 0.7), Weighting::Binary);
        let op = ShiftedInverseOperator::with_default_shift(&lap, 2).unwrap();
        let init = SpectralBasis::random(96, 6, 1).unwrap();
        let a = orthogonal_iteration(&op, &init, 5).unwrap();
        let b = orthogonal_iteration(&op, &init, 5).unwrap();
        assert_eq!(a, b);
    }

    fn doi_params(c_min: usize, c_max: usize) -> DoiParams {
        DoiParams {
            eps_l: 1e-3,
            eps_h: 1e-2,
            c_min,
            c_max,
            t_max: 200,
        }
    }

    #[test]
    fn complete_basis_has_zero_residual() {
        let mesh = shapes::grid(4, 4);
        let lap = mesh_laplacian(&mesh, Weighting::Binary);
        let op = ShiftedInverseOperator::with_default_shift(&lap, 1).unwrap();
        let coords = coords_matrix(mesh.vertices());
        let out = dynamic_oi(
            &op,
            &SpectralBasis::random(16, 16, 0).unwrap(),
            &coords,
            &doi_params(16, 16),
        )
        .unwrap();
        assert!(out.residual < 1e-10);
        assert_eq!(out.status, DoiStatus::AtMinBound);
        assert_eq!(out.basis.c(), 16);
    }

    #[test]
    fn band_satisfied_immediately() {
        let mesh = shapes::icosphere(2);
        let lap = mesh_laplacian(&mesh, Weighting::Binary);
        let op = ShiftedInverseOperator::with_default_shift(&lap, 2).unwrap();
        let coords = coords_matrix(mesh.vertices());
        let init = dense_eigendecomposition(&lap, 4096)
            .unwrap()
            .bottom(10)
            .unwrap();
        let e = summed_residual(&oi_step(&op, &init).unwrap(), &coords)
            .unwrap()
            .norm();
        let diag = mesh.bbox_diagonal();
        let params = DoiParams {
            eps_l: 0.5 * e / diag,
            eps_h: 2.0 * e / diag,
            c_min: 1,
            c_max: 100,
            t_max: 50,
        };
        let out = dynamic_oi(&op, &init, &coords, &params).unwrap();
        assert_eq!(out.status, DoiStatus::InBand);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.basis.c(), 10);
    }

    #[test]
    fn flat_block_needs_fewer_columns_than_curved() {
        let flat = shapes::grid(12, 12);
        let curved = shapes::bumpy(&flat, 2.0, 4, 9);
        let mut cs = Vec::new();
        for mesh in [&flat, &curved] {
            let lap = mesh_laplacian(mesh, Weighting::Binary);
            let op = ShiftedInverseOperator::with_default_shift(&lap, 2).unwrap();
            let coords = coords_matrix(mesh.vertices());
            let params = DoiParams {
                eps_l: 1e-4,
                eps_h: 1e-2,
                c_min: 1,
                c_max: 144,
                t_max: 400,
            };
            let out = dynamic_oi(
                &op,
                &SpectralBasis::random(144, 4, 3).unwrap(),
                &coords,
                &params,
            )
            .unwrap();
            assert!(out.status.settled(), "{:?}", out.status);
            cs.push(out.basis.c());
        }
        assert!(cs[0] < cs[1], "{cs:?}");
    }

    #[test]
    fn doi_rejects_bad_band() {
        let mesh = shapes::grid(4, 4);
        let lap = mesh_laplacian(&mesh, Weighting::Binary);
        let op = ShiftedInverseOperator::with_default_shift(&lap, 1).unwrap();
        let coords = coords_matrix(mesh.vertices());
        let mut p = doi_params(1, 8);
        p.eps_l = p.eps_h;
        assert!(dynamic_oi(&op, &SpectralBasis::random(16, 2, 0).unwrap(), &coords, &p).is_err());
        let p = doi_params(3, 8);
        assert!(dynamic_oi(&op, &SpectralBasis::random(16, 2, 0).unwrap(), &coords, &p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn every_step_stays_orthonormal(seed in 0u64..1000, c in 1usize..12, z in 1u32..4) {
            let mesh = shapes::random_edge_flips(&shapes::icosphere(2), 0.1, seed);
            let lap = mesh_laplacian(&mesh, Weighting::Binary);
            let op = ShiftedInverseOperator::with_default_shift(&lap, z).unwrap();
            let mut u = SpectralBasis::random(lap.size(), c, seed).unwrap();
            for _ in 0..4 {
                u = oi_step(&op, &u).unwrap();
                prop_assert!(u.orthonormality_error() < 1e-10);
            }
        }
    }
}
