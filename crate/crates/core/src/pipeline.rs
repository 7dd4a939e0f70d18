//! Block layout and basis tracking shared by the codec, the denoiser and the
//! benchmarks: partition, overlap, order, then one spectral basis per block.

use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, Point3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{EdgeSet, Mesh};
use crate::partition::{
    expand_to_size, order_submeshes, overlap_size, part_submeshes, partition_mesh,
    reconstruct_weighted, AverageMode, Partition, Submesh, SubmeshOrder,
};
use crate::spectral::{
    build_laplacian, coords_matrix, dense_eigendecomposition, dynamic_oi, matrix_to_points,
    orthogonal_iteration, orthonormalize, project, DoiParams, DoiStatus, ShiftedInverseOperator,
    SpectralBasis, Weighting, DEFAULT_DENSE_LIMIT, DEFAULT_RELATIVE_SHIFT,
};

/// How each block's basis is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisMode {
    /// Warm-started orthogonal iteration with fixed `c`.
    #[default]
    Oi,
    /// Orthogonal iteration with residual-driven `c`.
    Doi,
    /// Dense eigendecomposition of every block.
    Svd,
}

impl FromStr for BasisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oi" => Ok(BasisMode::Oi),
            "doi" => Ok(BasisMode::Doi),
            "svd" | "dense" => Ok(BasisMode::Svd),
            other => Err(Error::InvalidArgument(format!(
                "unknown basis mode {other:?} (oi|doi|svd)"
            ))),
        }
    }
}

impl std::fmt::Display for BasisMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BasisMode::Oi => "oi",
            BasisMode::Doi => "doi",
            BasisMode::Svd => "svd",
        })
    }
}

/// Subspace size, either absolute or as a fraction of the block size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubspaceSize {
    Count(usize),
    Fraction(f64),
}

impl Default for SubspaceSize {
    fn default() -> Self {
        SubspaceSize::Fraction(0.1)
    }
}

impl SubspaceSize {
    /// Concrete `c` for blocks of `n_d` vertices, clamped to `1..=n_d`.
    pub fn resolve(self, n_d: usize) -> usize {
        let c = match self {
            SubspaceSize::Count(c) => c,
            SubspaceSize::Fraction(f) => (f * n_d as f64).round() as usize,
        };
        c.clamp(1, n_d.max(1))
    }
}

impl FromStr for SubspaceSize {
    type Err = Error;

    /// `"30"` or `"25%"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("invalid subspace size {s:?}"));
        if let Some(p) = s.strip_suffix('%') {
            let f: f64 = p.trim().parse().map_err(|_| bad())?;
            if !(f > 0.0 && f <= 100.0) {
                return Err(bad());
            }
            Ok(SubspaceSize::Fraction(f / 100.0))
        } else {
            let c: usize = s.trim().parse().map_err(|_| bad())?;
            if c == 0 {
                return Err(bad());
            }
            Ok(SubspaceSize::Count(c))
        }
    }
}

impl std::fmt::Display for SubspaceSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SubspaceSize::Count(c) => write!(f, "{c}"),
            SubspaceSize::Fraction(x) => write!(f, "{}%", x * 100.0),
        }
    }
}

/// How blocks overlap and how overlapping copies are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stitching {
    /// One block per part, no overlap.
    NonOverlapping,
    /// Overlapping blocks, plain mean of copies.
    Simple,
    /// Overlapping blocks, degree-weighted mean of copies.
    #[default]
    Weighted,
}

impl Stitching {
    fn average(self) -> AverageMode {
        match self {
            Stitching::Weighted => AverageMode::Weighted,
            _ => AverageMode::Simple,
        }
    }
}

impl FromStr for Stitching {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "non-overlapping" => Ok(Stitching::NonOverlapping),
            "simple" => Ok(Stitching::Simple),
            "weighted" => Ok(Stitching::Weighted),
            other => Err(Error::InvalidArgument(format!(
                "unknown stitching {other:?} (none|simple|weighted)"
            ))),
        }
    }
}

impl std::fmt::Display for Stitching {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stitching::NonOverlapping => "none",
            Stitching::Simple => "simple",
            Stitching::Weighted => "weighted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutConfig {
    pub k: usize,
    pub growth: f64,
    pub stitching: Stitching,
    pub seed: u64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            k: 1,
            growth: 1.15,
            stitching: Stitching::Weighted,
            seed: 0,
        }
    }
}

/// Partition, blocks and their processing order.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    pub partition: Partition,
    pub submeshes: Vec<Submesh>,
    pub order: SubmeshOrder,
    /// Common block size, or 0 when blocks do not overlap and differ in size.
    pub n_d: usize,
    pub stitching: Stitching,
}

impl BlockLayout {
    pub fn build(mesh: &Mesh, edges: &EdgeSet, cfg: &LayoutConfig) -> Result<Self> {
        let partition = partition_mesh(mesh, edges, cfg.k, cfg.seed)?;
        let n_d = match cfg.stitching {
            Stitching::NonOverlapping => 0,
            _ => overlap_size(&partition, cfg.growth)?,
        };
        Self::from_partition(mesh, edges, partition, n_d, cfg.stitching, None, cfg.seed)
    }

    /// Rebuilds a layout from a stored partition; `sequence` replaces the
    /// seeded order when given. Only the mesh connectivity is read.
    pub fn from_partition(
        mesh: &Mesh,
        edges: &EdgeSet,
        partition: Partition,
        n_d: usize,
        stitching: Stitching,
        sequence: Option<Vec<usize>>,
        seed: u64,
    ) -> Result<Self> {
        let submeshes = match stitching {
            Stitching::NonOverlapping => part_submeshes(mesh, edges, &partition),
            _ => expand_to_size(mesh, edges, &partition, n_d)?,
        };
        let order = match sequence {
            Some(sequence) => {
                let mut check = sequence.clone();
                check.sort_unstable();
                if check != (0..submeshes.len()).collect::<Vec<_>>() {
                    return Err(Error::InvalidArgument(
                        "block order is not a permutation".into(),
                    ));
                }
                SubmeshOrder { sequence }
            }
            None => order_submeshes(&submeshes, seed)?,
        };
        Ok(BlockLayout {
            partition,
            submeshes,
            order,
            n_d,
            stitching,
        })
    }

    pub fn k(&self) -> usize {
        self.submeshes.len()
    }

    /// Stitches per-block local positions, indexed by submesh id.
    pub fn stitch(&self, blocks: &[Vec<Point3<f64>>], n: usize) -> Result<Vec<Point3<f64>>> {
        reconstruct_weighted(
            self.submeshes.iter().zip(blocks.iter().map(Vec::as_slice)),
            n,
            self.stitching.average(),
        )
    }
}

/// Residual band for [`BasisMode::Doi`]; bounds default to `1..=n_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoiBand {
    pub eps_l: f64,
    pub eps_h: f64,
    pub c_min: Option<usize>,
    pub c_max: Option<usize>,
    pub t_max: usize,
}

impl Default for DoiBand {
    fn default() -> Self {
        DoiBand {
            eps_l: 2e-3,
            eps_h: 1e-2,
            c_min: None,
            c_max: None,
            t_max: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingConfig {
    pub mode: BasisMode,
    pub c: SubspaceSize,
    pub z: u32,
    pub t_max: usize,
    pub weighting: Weighting,
    /// Shift `δ` relative to the mean diagonal of each block Laplacian.
    pub delta_rel: f64,
    pub dense_limit: usize,
    /// OI steps for the first block when it is too large for the dense solver.
    pub initial_t_max: usize,
    pub doi: DoiBand,
    pub seed: u64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            mode: BasisMode::Oi,
            c: SubspaceSize::default(),
            z: 2,
            t_max: 2,
            weighting: Weighting::Binary,
            delta_rel: DEFAULT_RELATIVE_SHIFT,
            dense_limit: DEFAULT_DENSE_LIMIT,
            initial_t_max: 50,
            doi: DoiBand::default(),
            seed: 0,
        }
    }
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.z == 0 {
            return bad("z must be at least 1".into());
        }
        if self.t_max == 0 || self.initial_t_max == 0 {
            return bad("t_max must be at least 1".into());
        }
        if !(self.delta_rel > 0.0) || !self.delta_rel.is_finite() {
            return bad(format!(
                "relative shift must be positive, got {}",
                self.delta_rel
            ));
        }
        if let SubspaceSize::Fraction(f) = self.c {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("subspace fraction must be in (0, 1], got {f}"));
            }
        }
        if self.mode == BasisMode::Doi {
            let d = &self.doi;
            if !(0.0 < d.eps_l && d.eps_l < d.eps_h) {
                return bad(format!(
                    "need 0 < eps_l < eps_h, got ({}, {})",
                    d.eps_l, d.eps_h
                ));
            }
            if let (Some(lo), Some(hi)) = (d.c_min, d.c_max) {
                if lo > hi {
                    return bad(format!("c_min {lo} exceeds c_max {hi}"));
                }
            }
            if d.t_max == 0 {
                return bad("DOI t_max must be at least 1".into());
            }
        }
        Ok(())
    }
}

/// Per-block outcome, in processing order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub submesh: usize,
    pub c: usize,
    /// OI steps taken (0 when the dense solver produced the basis).
    pub iterations: usize,
    pub doi_status: Option<DoiStatus>,
    pub residual: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrackedBases {
    /// Indexed by submesh id.
    pub bases: Vec<SpectralBasis>,
    pub reports: Vec<BlockReport>,
    /// Wall time of the basis stage.
    pub seconds: f64,
}

impl TrackedBases {
    /// Subspace size of every block, indexed by submesh id.
    pub fn sizes(&self) -> Vec<usize> {
        self.bases.iter().map(SpectralBasis::c).collect()
    }
}

fn block_seed(seed: u64, block: usize) -> u64 {
    seed ^ (block as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Truncates `u` or extends it with seeded Gaussian columns to `c` columns.
pub fn resize_basis(u: &SpectralBasis, c: usize, seed: u64) -> Result<SpectralBasis> {
    if c <= u.c() {
        return Ok(u.truncated(c));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extra = c - u.c();
    let mut m = u.matrix().clone().resize_horizontally(c, 0.0);
    for j in 0..extra {
        for i in 0..m.nrows() {
            m[(i, u.c() + j)] = StandardNormal.sample(&mut rng);
        }
    }
    SpectralBasis::new(orthonormalize(&m)?)
}

/// Computes one basis per block following `layout.order`.
pub fn track_bases(
    mesh: &Mesh,
    layout: &BlockLayout,
    cfg: &TrackingConfig,
) -> Result<TrackedBases> {
    track(mesh, layout, cfg, None)
}

/// Fixed-size OI tracking with a prescribed `c` per block (indexed by
/// submesh id). Depends on connectivity only under binary weights, which is
/// what lets a decoder rebuild the encoder's bases bit for bit.
pub fn replay_bases(
    mesh: &Mesh,
    layout: &BlockLayout,
    cfg: &TrackingConfig,
    sizes: &[usize],
) -> Result<TrackedBases> {
    if sizes.len() != layout.k() {
        return Err(Error::Dimension(format!(
            "{} block sizes for {} blocks",
            sizes.len(),
            layout.k()
        )));
    }
    let cfg = TrackingConfig {
        mode: if cfg.mode == BasisMode::Svd {
            BasisMode::Svd
        } else {
            BasisMode::Oi
        },
        ..*cfg
    };
    track(mesh, layout, &cfg, Some(sizes))
}

fn track(
    mesh: &Mesh,
    layout: &BlockLayout,
    cfg: &TrackingConfig,
    sizes: Option<&[usize]>,
) -> Result<TrackedBases> {
    cfg.validate()?;
    let start = Instant::now();
    let k = layout.k();
    let mut bases: Vec<Option<SpectralBasis>> = vec![None; k];
    let mut reports = Vec::with_capacity(k);
    let mut prev: Option<SpectralBasis> = None;
    for &b in &layout.order.sequence {
        let t0 = Instant::now();
        let sub = &layout.submeshes[b];
        let n_d = sub.len();
        let lap = build_laplacian(sub, mesh.vertices(), cfg.weighting)?;
        let (c_lo, c_hi) = match cfg.mode {
            BasisMode::Doi => (
                cfg.doi.c_min.unwrap_or(1).clamp(1, n_d),
                cfg.doi.c_max.unwrap_or(n_d).clamp(1, n_d),
            ),
            _ => (1, n_d),
        };
        let c = match sizes {
            Some(s) => s[b],
            None => match (&prev, cfg.mode) {
                (Some(p), BasisMode::Doi) => p.c(),
                _ => cfg.c.resolve(n_d),
            },
        }
        .clamp(c_lo, c_hi);
        if c == 0 || c > n_d {
            return Err(Error::InvalidArgument(format!(
                "c = {c} invalid for a block of {n_d} vertices"
            )));
        }

        let mut iterations = 0;
        let mut doi_status = None;
        let mut residual = None;
        let basis = if cfg.mode == BasisMode::Svd {
            dense_eigendecomposition(&lap, cfg.dense_limit)?.bottom(c)?
        } else {
            let delta = ShiftedInverseOperator::shift_for(&lap, cfg.delta_rel);
            let op = ShiftedInverseOperator::new(&lap, delta, cfg.z)?;
            let warm = prev.as_ref().filter(|p| p.n_d() == n_d);
            let init = match warm {
                Some(p) => {
                    let u = resize_basis(p, c, block_seed(cfg.seed, b))?;
                    if cfg.mode == BasisMode::Oi {
                        iterations = cfg.t_max;
                        orthogonal_iteration(&op, &u, cfg.t_max)?
                    } else {
                        u
                    }
                }
                None if n_d <= cfg.dense_limit => {
                    dense_eigendecomposition(&lap, cfg.dense_limit)?.bottom(c)?
                }
                None => {
                    iterations = cfg.initial_t_max;
                    let u = SpectralBasis::random(n_d, c, block_seed(cfg.seed, b))?;
                    orthogonal_iteration(&op, &u, cfg.initial_t_max)?
                }
            };
            if cfg.mode == BasisMode::Doi {
                let coords = coords_matrix(&sub.gather(mesh.vertices()));
                let params = DoiParams {
                    eps_l: cfg.doi.eps_l,
                    eps_h: cfg.doi.eps_h,
                    c_min: c_lo,
                    c_max: c_hi,
                    t_max: cfg.doi.t_max,
                };
                let out = dynamic_oi(&op, &init, &coords, &params)?;
                iterations += out.iterations;
                doi_status = Some(out.status);
                residual = Some(out.residual);
                out.basis
            } else {
                init
            }
        };
        reports.push(BlockReport {
            submesh: b,
            c: basis.c(),
            iterations,
            doi_status,
            residual,
            seconds: t0.elapsed().as_secs_f64(),
        });
        prev = Some(basis.clone());
        bases[b] = Some(basis);
    }
    let bases = bases
        .into_iter()
        .enumerate()
        .map(|(i, b)| {
            b.ok_or_else(|| Error::InvalidArgument(format!("block {i} missing from order")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrackedBases {
        bases,
        reports,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Projects every block of `vertices` onto its basis (`U Uᵀ v`), indexed by submesh id.
pub fn project_blocks(
    vertices: &[Point3<f64>],
    layout: &BlockLayout,
    bases: &[SpectralBasis],
) -> Result<Vec<Vec<Point3<f64>>>> {
    layout
        .submeshes
        .par_iter()
        .zip(bases.par_iter())
        .map(|(sub, basis)| {
            let coords: DMatrix<f64> = coords_matrix(&sub.gather(vertices));
            Ok(matrix_to_points(&project(basis, &coords)?))
        })
        .collect()
}

/// Low-pass reconstruction of `vertices`: per-block projection then stitching.
pub fn lowpass(
    vertices: &[Point3<f64>],
    layout: &BlockLayout,
    bases: &[SpectralBasis],
) -> Result<Vec<Point3<f64>>> {
    let blocks = project_blocks(vertices, layout, bases)?;
    layout.stitch(&blocks, vertices.len())
}
