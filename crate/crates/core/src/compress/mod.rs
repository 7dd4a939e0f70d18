//! Block-based spectral geometry codec.
//!
//! Each block transmits `c×3` GFT coefficients, uniformly quantized per axis.
//! The decoder rebuilds every block basis from connectivity alone, so the
//! Laplacian is always binary-weighted here.

mod bits;
mod container;

pub use bits::{packed_len, BitReader, BitWriter};
pub use container::{EncodedMesh, FORMAT_VERSION, MAGIC};

use std::time::Instant;

use nalgebra::{DMatrix, Point3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{build_edges, Mesh};
use crate::partition::{Partition, Submesh};
use crate::pipeline::{
    replay_bases, track_bases, BasisMode, BlockLayout, LayoutConfig, TrackedBases, TrackingConfig,
};
use crate::spectral::{coords_matrix, gft, igft, matrix_to_points, SpectralBasis, Weighting};

/// Largest supported coefficient width.
pub const MAX_QUANT_BITS: u32 = 16;

/// Uniform scalar quantizer over `[min, max]` with `2^bits` cells and
/// midpoint reconstruction. A zero-width range decodes to `min` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisQuantizer {
    pub min: f64,
    pub max: f64,
    pub bits: u32,
}

impl AxisQuantizer {
    pub fn fit(values: impl IntoIterator<Item = f64>, bits: u32) -> Result<Self> {
        check_bits(bits)?;
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(
                    "cannot quantize a non-finite coefficient".into(),
                ));
            }
            min = min.min(v);
            max = max.max(v);
        }
        if min > max {
            min = 0.0;
            max = 0.0;
        }
        Ok(AxisQuantizer { min, max, bits })
    }

    #[inline]
    pub fn is_degenerate(&self) -> bool {
        self.max == self.min
    }

    #[inline]
    pub fn levels(&self) -> u64 {
        1u64 << self.bits
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.levels() as f64
    }

    /// Worst-case reconstruction error of a value inside the range.
    #[inline]
    pub fn half_step(&self) -> f64 {
        0.5 * self.step()
    }

    pub fn quantize(&self, x: f64) -> u32 {
        if self.is_degenerate() {
            return 0;
        }
        let q = ((x - self.min) / self.step()).floor();
        q.clamp(0.0, (self.levels() - 1) as f64) as u32
    }

    pub fn dequantize(&self, q: u32) -> f64 {
        if self.is_degenerate() {
            return self.min;
        }
        self.min + (q as f64 + 0.5) * self.step()
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if !(1..=MAX_QUANT_BITS).contains(&bits) {
        return Err(Error::InvalidArgument(format!(
            "quantization bits must be in 1..={MAX_QUANT_BITS}, got {bits}"
        )));
    }
    Ok(())
}

/// Quantized coefficients of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBlock {
    pub submesh: usize,
    pub c: usize,
    pub quantizers: [AxisQuantizer; 3],
    /// `c` values per axis, axis-major.
    pub values: Vec<u32>,
}

impl EncodedBlock {
    fn coefficients(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.c, 3, |i, a| {
            self.quantizers[a].dequantize(self.values[a * self.c + i])
        })
    }
}

pub fn encode_block(
    submesh: &Submesh,
    vertices: &[Point3<f64>],
    basis: &SpectralBasis,
    q_c: u32,
) -> Result<EncodedBlock> {
    let e = gft(basis, &coords_matrix(&submesh.gather(vertices)))?;
    let c = basis.c();
    let mut quantizers = [AxisQuantizer {
        min: 0.0,
        max: 0.0,
        bits: q_c,
    }; 3];
    let mut values = Vec::with_capacity(3 * c);
    for (a, quant) in quantizers.iter_mut().enumerate() {
        *quant = AxisQuantizer::fit(e.column(a).iter().copied(), q_c)?;
        values.extend(e.column(a).iter().map(|&x| quant.quantize(x)));
    }
    Ok(EncodedBlock {
        submesh: submesh.id,
        c,
        quantizers,
        values,
    })
}

/// Dequantizes and synthesizes the block (`n_d × 3`).
pub fn decode_block(block: &EncodedBlock, basis: &SpectralBasis) -> Result<DMatrix<f64>> {
    if basis.c() != block.c {
        return Err(Error::Dimension(format!(
            "block {} carries {} coefficients but its basis has {} columns",
            block.submesh,
            block.c,
            basis.c()
        )));
    }
    igft(basis, &block.coefficients())
}

/// Nominal rate `3·q_c·c·k / n`.
pub fn bits_per_vertex(q_c: u32, c: usize, k: usize, n: usize) -> f64 {
    3.0 * q_c as f64 * c as f64 * k as f64 / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecConfig {
    pub layout: LayoutConfig,
    pub tracking: TrackingConfig,
    pub q_c: u32,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            layout: LayoutConfig::default(),
            tracking: TrackingConfig::default(),
            q_c: 12,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        check_bits(self.q_c)?;
        if self.tracking.weighting != Weighting::Binary {
            return Err(Error::InvalidArgument(
                "compression needs binary weights: the decoder has no vertex positions".into(),
            ));
        }
        self.tracking.validate()
    }
}

/// Encoder output plus the bases it used.
#[derive(Debug, Clone)]
pub struct Compressed {
    pub encoded: EncodedMesh,
    pub bases: TrackedBases,
    /// Layout, partition and basis time.
    pub basis_seconds: f64,
    pub encode_seconds: f64,
}

pub fn compress_mesh(mesh: &Mesh, cfg: &CodecConfig) -> Result<Compressed> {
    cfg.validate()?;
    let t0 = Instant::now();
    let edges = build_edges(mesh);
    let layout = BlockLayout::build(mesh, &edges, &cfg.layout)?;
    let sizes = match cfg.tracking.mode {
        // The residual test needs the original coordinates, so only the
        // chosen sizes travel; both sides then run fixed-size OI with them.
        BasisMode::Doi => track_bases(mesh, &layout, &cfg.tracking)?.sizes(),
        _ => layout
            .submeshes
            .iter()
            .map(|s| cfg.tracking.c.resolve(s.len()))
            .collect(),
    };
    let bases = replay_bases(mesh, &layout, &cfg.tracking, &sizes)?;
    let basis_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let mut blocks: Vec<EncodedBlock> = layout
        .order
        .sequence
        .par_iter()
        .map(|&b| {
            encode_block(
                &layout.submeshes[b],
                mesh.vertices(),
                &bases.bases[b],
                cfg.q_c,
            )
        })
        .collect::<Result<_>>()?;
    blocks.shrink_to_fit();
    let encoded = EncodedMesh {
        config: *cfg,
        vertex_count: mesh.vertex_count(),
        faces: mesh.faces().to_vec(),
        assignment: layout.partition.assignment().to_vec(),
        k: layout.partition.k(),
        n_d: layout.n_d,
        order: layout.order.sequence.clone(),
        blocks,
    };
    Ok(Compressed {
        encoded,
        bases,
        basis_seconds,
        encode_seconds: t1.elapsed().as_secs_f64(),
    })
}

/// Rebuilds the decoder-side layout and bases from the stream alone.
pub fn decoder_bases(enc: &EncodedMesh) -> Result<(Mesh, BlockLayout, TrackedBases)> {
    let connectivity = Mesh::new(vec![Point3::origin(); enc.vertex_count], enc.faces.clone())?;
    let edges = build_edges(&connectivity);
    let partition = Partition::from_assignment(enc.assignment.clone(), enc.k)?;
    let layout = BlockLayout::from_partition(
        &connectivity,
        &edges,
        partition,
        enc.n_d,
        enc.config.layout.stitching,
        Some(enc.order.clone()),
        enc.config.layout.seed,
    )?;
    let mut sizes = vec![0; layout.k()];
    for b in &enc.blocks {
        sizes[b.submesh] = b.c;
    }
    let bases = replay_bases(&connectivity, &layout, &enc.config.tracking, &sizes)?;
    Ok((connectivity, layout, bases))
}

pub fn decompress_mesh(enc: &EncodedMesh) -> Result<Mesh> {
    let (connectivity, layout, bases) = decoder_bases(enc)?;
    let mut decoded = vec![Vec::new(); layout.k()];
    let pieces: Vec<(usize, Vec<Point3<f64>>)> = enc
        .blocks
        .par_iter()
        .map(|b| {
            Ok((
                b.submesh,
                matrix_to_points(&decode_block(b, &bases.bases[b.submesh])?),
            ))
        })
        .collect::<Result<_>>()?;
    for (id, pts) in pieces {
        decoded[id] = pts;
    }
    let vertices = layout.stitch(&decoded, enc.vertex_count)?;
    connectivity.with_vertices(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use crate::pipeline::SubspaceSize;
    use crate::spectral::{dense_eigendecomposition, project, Laplacian};
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_column_is_exact() {
        let q = AxisQuantizer::fit([2.5; 7], 12).unwrap();
        assert!(q.is_degenerate());
        assert_eq!(q.dequantize(q.quantize(2.5)), 2.5);
    }

    #[test]
    fn quantizer_half_step_bound_exhaustive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random_range(-40.0..75.0)).collect();
        let q = AxisQuantizer::fit(xs.iter().copied(), 12).unwrap();
        let bound = (q.max - q.min) / 8192.0;
        assert_eq!(q.half_step(), bound);
        for &x in &xs {
            let v = q.quantize(x);
            assert!(v < 4096);
            assert!((q.dequantize(v) - x).abs() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn bpv_formula() {
        assert_eq!(bits_per_vertex(12, 1, 1, 36), 1.0);
        let bunny = bits_per_vertex(12, 30, 70, 34_817);
        assert!((bunny - 2.1713).abs() < 1e-3, "{bunny}");
        assert_eq!(bits_per_vertex(12, 60, 70, 34_817), 2.0 * bunny);
    }

    fn codec(k: usize, c: SubspaceSize, q_c: u32) -> CodecConfig {
        CodecConfig {
            layout: LayoutConfig {
                k,
                ..Default::default()
            },
            tracking: TrackingConfig {
                c,
                ..Default::default()
            },
            q_c,
        }
    }

    #[test]
    fn tetrahedron_full_basis_roundtrip() {
        let mesh = shapes::tetrahedron();
        let out = compress_mesh(&mesh, &codec(1, SubspaceSize::Count(4), 16)).unwrap();
        let b = &out.encoded.blocks[0];
        let dec = decompress_mesh(&out.encoded).unwrap();
        assert_eq!(dec.faces(), mesh.faces());
        // Vertex error per axis is U·δ with |δ_i| ≤ half-step, so ‖·‖₂ ≤ √c·half-step.
        for a in 0..3 {
            let err: f64 = dec
                .vertices()
                .iter()
                .zip(mesh.vertices())
                .map(|(p, q)| (p[a] - q[a]).powi(2))
                .sum();
            assert!(err.sqrt() <= 2.0 * b.quantizers[a].half_step() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn zero_block_decodes_to_zero() {
        let basis = SpectralBasis::random(10, 3, 0).unwrap();
        let block = EncodedBlock {
            submesh: 0,
            c: 3,
            quantizers: [AxisQuantizer {
                min: 0.0,
                max: 0.0,
                bits: 12,
            }; 3],
            values: vec![0; 9],
        };
        assert_eq!(decode_block(&block, &basis).unwrap(), DMatrix::zeros(10, 3));
        let wrong = SpectralBasis::random(10, 4, 0).unwrap();
        assert!(decode_block(&block, &wrong).is_err());
    }

    #[test]
    fn small_c_decodes_to_dense_lowpass() {
        let mesh = shapes::bumpy(&shapes::icosphere(2), 0.1, 3, 2);
        // c = 4 ends at the gap below the l = 2 sphere-harmonic multiplet.
        let out = compress_mesh(&mesh, &codec(1, SubspaceSize::Count(4), 16)).unwrap();
        let dec = decompress_mesh(&out.encoded).unwrap();
        // Independent low-pass from the full dense spectrum of the whole mesh.
        let e = build_edges(&mesh);
        let adj: Vec<Vec<usize>> = (0..mesh.vertex_count())
            .map(|i| e.neighbors(i).to_vec())
            .collect();
        let lap = Laplacian::from_adjacency(&adj, mesh.vertices(), Weighting::Binary).unwrap();
        let u = dense_eigendecomposition(&lap, 4096)
            .unwrap()
            .bottom(4)
            .unwrap();
        let expected = project(&u, &coords_matrix(mesh.vertices())).unwrap();
        let b = &out.encoded.blocks[0];
        let tol: f64 = b.quantizers.iter().map(|q| q.half_step()).sum::<f64>() * 2.0 + 1e-9;
        for (i, p) in dec.vertices().iter().enumerate() {
            for a in 0..3 {
                assert!((p[a] - expected[(i, a)]).abs() <= tol, "{i} {a}");
            }
        }
    }

    #[test]
    fn bitstream_is_reproducible_and_decoder_bases_match() {
        let mesh = shapes::bumpy(&shapes::torus(30, 15, 3.0, 1.0), 0.05, 2, 7);
        for mode in [BasisMode::Oi, BasisMode::Doi, BasisMode::Svd] {
            let mut cfg = codec(5, SubspaceSize::Fraction(0.1), 12);
            cfg.tracking.mode = mode;
            let a = compress_mesh(&mesh, &cfg).unwrap();
            let b = compress_mesh(&mesh, &cfg).unwrap();
            assert_eq!(a.encoded.to_bytes(), b.encoded.to_bytes());
            let parsed = EncodedMesh::from_bytes(&a.encoded.to_bytes()).unwrap();
            assert_eq!(parsed, a.encoded);
            let (_, _, dec) = decoder_bases(&parsed).unwrap();
            for (x, y) in a.bases.bases.iter().zip(&dec.bases) {
                let (mut bx, mut by) = (Vec::new(), Vec::new());
                crate::spectral::write_basis(&mut bx, x).unwrap();
                crate::spectral::write_basis(&mut by, y).unwrap();
                assert_eq!(bx, by, "{mode}");
            }
        }
    }

    #[test]
    fn rejects_weighted_laplacian_and_bad_bits() {
        let mesh = shapes::tetrahedron();
        let mut cfg = codec(1, SubspaceSize::Count(4), 12);
        cfg.tracking.weighting = Weighting::InverseSquaredDistance;
        assert!(compress_mesh(&mesh, &cfg).is_err());
        assert!(compress_mesh(&mesh, &codec(1, SubspaceSize::Count(4), 17)).is_err());
        assert!(compress_mesh(&mesh, &codec(1, SubspaceSize::Count(4), 0)).is_err());
    }
}
