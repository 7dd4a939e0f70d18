//! Quality measures: NMSVE, normal differences, operator coherence and
//! boundary error statistics.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, Point3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{build_edges, face_geometry, EdgeSet, Mesh};
use crate::partition::{overlap_boundary, Submesh};
use crate::pipeline::{BlockLayout, LayoutConfig, Stitching};
use crate::spectral::{build_laplacian, ShiftedInverseOperator, Weighting};

/// Reported in place of `-∞` for a zero error.
pub const DB_FLOOR: f64 = -200.0;

/// Side of the square operator images used by the coherence study.
pub const COHERENCE_SIZE: usize = 100;

pub fn to_db(value: f64) -> f64 {
    if value > 0.0 {
        (10.0 * value.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// `v_i − Σ d_ij⁻¹ v_j / Σ d_ij⁻¹` with distances taken from `reference`.
pub fn geometric_laplacian(
    edges: &EdgeSet,
    reference: &[Point3<f64>],
    v: &[Point3<f64>],
) -> Result<Vec<Vector3<f64>>> {
    (0..v.len())
        .map(|i| {
            let nb = edges.neighbors(i);
            if nb.is_empty() {
                return Ok(v[i].coords);
            }
            let (mut acc, mut wsum) = (Vector3::zeros(), 0.0);
            for &j in nb {
                let d = (reference[i] - reference[j]).norm();
                if d == 0.0 {
                    return Err(Error::CoincidentVertices(i.min(j), i.max(j)));
                }
                acc += v[j].coords / d;
                wsum += 1.0 / d;
            }
            Ok(v[i].coords - acc / wsum)
        })
        .collect()
}

/// Linear NMSVE, `(‖v−ṽ‖ + ‖GL(v)−GL(ṽ)‖) / 2n` over all coordinates.
pub fn nmsve_linear(original: &Mesh, reconstructed: &Mesh) -> Result<f64> {
    let n = original.vertex_count();
    if reconstructed.vertex_count() != n || reconstructed.faces() != original.faces() {
        return Err(Error::Dimension(
            "meshes differ in vertex count or connectivity".into(),
        ));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let edges = build_edges(original);
    let (v, w) = (original.vertices(), reconstructed.vertices());
    let gv = geometric_laplacian(&edges, v, v)?;
    let gw = geometric_laplacian(&edges, v, w)?;
    let geo: f64 = v
        .iter()
        .zip(w)
        .map(|(a, b)| (a - b).norm_squared())
        .sum::<f64>()
        .sqrt();
    let lap: f64 = gv
        .iter()
        .zip(&gw)
        .map(|(a, b)| (a - b).norm_squared())
        .sum::<f64>()
        .sqrt();
    Ok((geo + lap) / (2.0 * n as f64))
}

/// NMSVE in dB.
pub fn nmsve(original: &Mesh, reconstructed: &Mesh) -> Result<f64> {
    nmsve_linear(original, reconstructed).map(to_db)
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!(
            "{a} reference normals vs {b} test normals"
        )));
    }
    Ok(())
}

/// Mean of `1 − n_refᵀ n_test` over faces.
pub fn mnd(reference: &[Vector3<f64>], test: &[Vector3<f64>]) -> Result<f64> {
    check_lengths(reference.len(), test.len())?;
    if reference.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = reference
        .iter()
        .zip(test)
        .map(|(a, b)| 1.0 - a.dot(b).clamp(-1.0, 1.0))
        .sum();
    Ok(s / reference.len() as f64)
}

/// Mean angle between corresponding normals, degrees.
pub fn mean_angle_theta(reference: &[Vector3<f64>], test: &[Vector3<f64>]) -> Result<f64> {
    check_lengths(reference.len(), test.len())?;
    if reference.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = reference
        .iter()
        .zip(test)
        .map(|(a, b)| a.dot(b).clamp(-1.0, 1.0).acos().to_degrees())
        .sum();
    Ok(s / reference.len() as f64)
}

pub fn mesh_mnd(reference: &Mesh, test: &Mesh) -> Result<f64> {
    mnd(
        &face_geometry(reference).normals,
        &face_geometry(test).normals,
    )
}

pub fn mesh_theta(reference: &Mesh, test: &Mesh) -> Result<f64> {
    mean_angle_theta(
        &face_geometry(reference).normals,
        &face_geometry(test).normals,
    )
}

/// Elementwise mean squared difference of two operator images.
pub fn laplacian_coherence_mse(image: &DMatrix<f64>, reference_mean: &DMatrix<f64>) -> Result<f64> {
    if image.shape() != reference_mean.shape() {
        return Err(Error::Dimension(format!(
            "image {:?} vs mean {:?}",
            image.shape(),
            reference_mean.shape()
        )));
    }
    if image.is_empty() {
        return Ok(0.0);
    }
    Ok((image - reference_mean).norm_squared() / image.len() as f64)
}

/// Leading `size × size` block of `R = (L + δI)⁻¹` for one submesh.
pub fn operator_image(
    sub: &Submesh,
    vertices: &[Point3<f64>],
    weighting: Weighting,
    delta_rel: f64,
    size: usize,
) -> Result<DMatrix<f64>> {
    if sub.len() < size {
        return Err(Error::InvalidArgument(format!(
            "block of {} vertices is smaller than the {size}×{size} image",
            sub.len()
        )));
    }
    let lap = build_laplacian(sub, vertices, weighting)?;
    let op =
        ShiftedInverseOperator::new(&lap, ShiftedInverseOperator::shift_for(&lap, delta_rel), 1)?;
    let mut e = DMatrix::zeros(sub.len(), size);
    for i in 0..size {
        e[(i, i)] = 1.0;
    }
    Ok(op.apply(&e)?.rows(0, size).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceConfig {
    pub k: usize,
    pub growth: f64,
    pub weighting: Weighting,
    pub delta_rel: f64,
    pub size: usize,
    pub seed: u64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        CoherenceConfig {
            k: 10,
            growth: 1.15,
            weighting: Weighting::Binary,
            delta_rel: crate::spectral::DEFAULT_RELATIVE_SHIFT,
            size: COHERENCE_SIZE,
            seed: 0,
        }
    }
}

/// Operator images of one model: the first block in processing order is the
/// probe, the mean of the remaining blocks is the model's reference.
#[derive(Debug, Clone)]
pub struct ModelImages {
    pub probe: DMatrix<f64>,
    pub mean: DMatrix<f64>,
}

pub fn model_images(mesh: &Mesh, cfg: &CoherenceConfig) -> Result<ModelImages> {
    if cfg.k < 2 {
        return Err(Error::InvalidArgument(
            "coherence study needs k >= 2".into(),
        ));
    }
    let edges = build_edges(mesh);
    let layout = BlockLayout::build(
        mesh,
        &edges,
        &LayoutConfig {
            k: cfg.k,
            growth: cfg.growth,
            stitching: Stitching::Weighted,
            seed: cfg.seed,
        },
    )?;
    let images: Vec<DMatrix<f64>> = layout
        .order
        .sequence
        .par_iter()
        .map(|&s| {
            operator_image(
                &layout.submeshes[s],
                mesh.vertices(),
                cfg.weighting,
                cfg.delta_rel,
                cfg.size,
            )
        })
        .collect::<Result<_>>()?;
    let mut mean = DMatrix::zeros(cfg.size, cfg.size);
    for img in &images[1..] {
        mean += img;
    }
    mean /= (images.len() - 1) as f64;
    Ok(ModelImages {
        probe: images[0].clone(),
        mean,
    })
}

/// `out[i][j]` = MSE between model `i`'s probe image and model `j`'s mean image.
pub fn coherence_matrix(models: &[&Mesh], cfg: &CoherenceConfig) -> Result<Vec<Vec<f64>>> {
    let images: Vec<ModelImages> = models
        .iter()
        .map(|m| model_images(m, cfg))
        .collect::<Result<_>>()?;
    images
        .iter()
        .map(|a| {
            images
                .iter()
                .map(|b| laplacian_coherence_mse(&a.probe, &b.mean))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryStats {
    pub interior_std: f64,
    /// `None` when no vertex is flagged as boundary.
    pub boundary_std: Option<f64>,
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Standard deviation of per-vertex Euclidean error, split by `boundary`.
pub fn error_std_split(
    original: &[Point3<f64>],
    recon: &[Point3<f64>],
    boundary: &[bool],
) -> Result<BoundaryStats> {
    if original.len() != recon.len() || original.len() != boundary.len() {
        return Err(Error::Dimension(
            "error split inputs differ in length".into(),
        ));
    }
    let (mut inner, mut outer) = (Vec::new(), Vec::new());
    for ((a, b), &on) in original.iter().zip(recon).zip(boundary) {
        let e = (a - b).norm();
        if on {
            outer.push(e);
        } else {
            inner.push(e);
        }
    }
    Ok(BoundaryStats {
        interior_std: std_dev(&inner),
        boundary_std: (!outer.is_empty()).then(|| std_dev(&outer)),
    })
}

/// Error split where the boundary is every vertex in two or more submeshes.
pub fn boundary_error_stats(
    mesh: &Mesh,
    recon: &[Point3<f64>],
    submeshes: &[Submesh],
) -> Result<BoundaryStats> {
    error_std_split(
        mesh.vertices(),
        recon,
        &overlap_boundary(submeshes, mesh.vertex_count()),
    )
}

/// One CSV row of quality and timing figures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub label: String,
    pub nmsve_db: f64,
    pub mnd: f64,
    pub theta: f64,
    pub bpv: Option<f64>,
    pub timings: Vec<(String, f64)>,
    pub interior_std: Option<f64>,
    pub boundary_std: Option<f64>,
}

impl MetricsReport {
    pub const HEADER: [&'static str; 8] = [
        "label",
        "nmsve_db",
        "mnd",
        "theta_deg",
        "bpv",
        "interior_std",
        "boundary_std",
        "timings",
    ];

    /// NMSVE, MND and θ of `test` against `reference`.
    pub fn evaluate(label: impl Into<String>, reference: &Mesh, test: &Mesh) -> Result<Self> {
        Ok(MetricsReport {
            label: label.into(),
            nmsve_db: nmsve(reference, test)?,
            mnd: mesh_mnd(reference, test)?,
            theta: mesh_theta(reference, test)?,
            ..Default::default()
        })
    }

    pub fn with_timing(mut self, stage: &str, seconds: f64) -> Self {
        self.timings.push((stage.to_string(), seconds.max(0.0)));
        self
    }

    fn record(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let timings: Vec<String> = self
            .timings
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        vec![
            self.label.clone(),
            self.nmsve_db.to_string(),
            self.mnd.to_string(),
            self.theta.to_string(),
            opt(self.bpv),
            opt(self.interior_std),
            opt(self.boundary_std),
            timings.join(";"),
        ]
    }

    pub fn write_csv<W: Write>(rows: &[MetricsReport], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::HEADER)?;
        for r in rows {
            w.write_record(r.record())?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(rows: &[MetricsReport], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        Self::write_csv(rows, file)
    }
}
