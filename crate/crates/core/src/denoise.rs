//! Coarse-to-fine denoising: per-block spectral low-pass, then bilateral
//! normal filtering followed by iterative vertex updates.

use std::time::Instant;

use nalgebra::{DMatrix, Point3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{
    build_edges, face_geometry, face_geometry_of, face_neighborhoods, vertex_faces, FaceGeometry,
    Mesh,
};
use crate::pipeline::{
    lowpass, track_bases, BlockLayout, LayoutConfig, TrackedBases, TrackingConfig,
};
use crate::spectral::symmetric_eigen;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilateralParams {
    /// Spatial kernel width; `None` takes the mean centroid distance over
    /// each face's 1-ring.
    pub sigma_s: Option<f64>,
    pub sigma_r: f64,
    pub normal_iterations: usize,
    pub vertex_iterations: usize,
    /// Face ring depth of the filter neighborhood.
    pub neighborhood: usize,
}

impl Default for BilateralParams {
    fn default() -> Self {
        BilateralParams {
            sigma_s: None,
            sigma_r: 0.35,
            normal_iterations: 5,
            vertex_iterations: 10,
            neighborhood: 1,
        }
    }
}

impl BilateralParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if let Some(s) = self.sigma_s {
            if !positive(s) {
                return Err(Error::InvalidArgument(format!(
                    "sigma_s must be positive, got {s}"
                )));
            }
        }
        if !positive(self.sigma_r) {
            return Err(Error::InvalidArgument(format!(
                "sigma_r must be positive, got {}",
                self.sigma_r
            )));
        }
        if self.normal_iterations == 0 || self.vertex_iterations == 0 || self.neighborhood == 0 {
            return Err(Error::InvalidArgument(
                "normal/vertex iterations and neighborhood depth must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub fn spatial_kernel(a: &Point3<f64>, b: &Point3<f64>, sigma_s: f64) -> f64 {
    (-(a - b).norm_squared() / (2.0 * sigma_s * sigma_s)).exp()
}

pub fn range_kernel(a: &Vector3<f64>, b: &Vector3<f64>, sigma_r: f64) -> f64 {
    (-(a - b).norm_squared() / (2.0 * sigma_r * sigma_r)).exp()
}

/// Faces within `depth` vertex-sharing rings of each face, itself included.
pub fn face_rings(mesh: &Mesh, depth: usize) -> Vec<Vec<usize>> {
    let one = face_neighborhoods(mesh);
    if depth <= 1 {
        return one;
    }
    (0..one.len())
        .into_par_iter()
        .map(|f| {
            let mut ring = one[f].clone();
            let mut frontier = ring.clone();
            for _ in 1..depth {
                let mut next: Vec<usize> = frontier
                    .iter()
                    .flat_map(|&g| one[g].iter().copied())
                    .collect();
                next.sort_unstable();
                next.dedup();
                next.retain(|g| ring.binary_search(g).is_err());
                if next.is_empty() {
                    break;
                }
                ring.extend_from_slice(&next);
                ring.sort_unstable();
                frontier = next;
            }
            ring
        })
        .collect()
}

/// Mean centroid distance between each face and the other members of its ring.
pub fn default_sigma_s(geometry: &FaceGeometry, neighborhoods: &[Vec<usize>]) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for (i, ring) in neighborhoods.iter().enumerate() {
        for &j in ring.iter().filter(|&&j| j != i) {
            sum += (geometry.centroids[i] - geometry.centroids[j]).norm();
            count += 1;
        }
    }
    if count == 0 || sum == 0.0 {
        1.0
    } else {
        sum / count as f64
    }
}

/// Bilateral filtering of the face normals, `normal_iterations` Jacobi sweeps
/// with fixed centroids and areas. Faces whose weighted sum vanishes keep
/// their previous normal.
pub fn bilateral_normals(
    geometry: &FaceGeometry,
    neighborhoods: &[Vec<usize>],
    params: &BilateralParams,
) -> Result<Vec<Vector3<f64>>> {
    params.validate()?;
    if neighborhoods.len() != geometry.len() {
        return Err(Error::Dimension(format!(
            "{} neighborhoods for {} faces",
            neighborhoods.len(),
            geometry.len()
        )));
    }
    let sigma_s = params
        .sigma_s
        .unwrap_or_else(|| default_sigma_s(geometry, neighborhoods));
    let mut normals = geometry.normals.clone();
    for _ in 0..params.normal_iterations {
        let prev = &normals;
        normals = neighborhoods
            .par_iter()
            .enumerate()
            .map(|(i, ring)| {
                let mut acc = Vector3::zeros();
                for &j in ring {
                    let w = geometry.areas[j]
                        * spatial_kernel(&geometry.centroids[i], &geometry.centroids[j], sigma_s)
                        * range_kernel(&prev[i], &prev[j], params.sigma_r);
                    acc += prev[j] * w;
                }
                let norm = acc.norm();
                if norm > 1e-300 && norm.is_finite() {
                    acc / norm
                } else {
                    prev[i]
                }
            })
            .collect();
    }
    Ok(normals)
}

/// Sum over faces and their corners of the squared distance from the corner
/// to the plane through the face centroid with the target normal.
pub fn plane_energy(
    vertices: &[Point3<f64>],
    faces: &[[usize; 3]],
    normals: &[Vector3<f64>],
) -> f64 {
    faces
        .iter()
        .zip(normals)
        .map(|(f, n)| {
            let m = (vertices[f[0]].coords + vertices[f[1]].coords + vertices[f[2]].coords) / 3.0;
            f.iter()
                .map(|&v| n.dot(&(m - vertices[v].coords)).powi(2))
                .sum::<f64>()
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct VertexUpdate {
    pub mesh: Mesh,
    /// Energy before the first pass and after each pass.
    pub energies: Vec<f64>,
}

/// Moves every vertex toward the planes of its incident faces, one Jacobi pass
/// per iteration with centroids recomputed each time.
///
/// For fixed normals each pass is a preconditioned gradient step on the plane
/// energy with step inside the stability bound, so the energy cannot rise;
/// that is asserted after every pass.
pub fn update_vertices(
    mesh: &Mesh,
    target_normals: &[Vector3<f64>],
    vertex_iterations: usize,
) -> Result<VertexUpdate> {
    if target_normals.len() != mesh.face_count() {
        return Err(Error::Dimension(format!(
            "{} normals for {} faces",
            target_normals.len(),
            mesh.face_count()
        )));
    }
    let faces = mesh.faces();
    let incident = vertex_faces(mesh);
    let mut vertices = mesh.vertices().to_vec();
    let mut energies = vec![plane_energy(&vertices, faces, target_normals)];
    let slack = 1e-12 * energies[0].max(f64::MIN_POSITIVE);
    for pass in 0..vertex_iterations {
        let centroids: Vec<Vector3<f64>> = faces
            .iter()
            .map(|f| (vertices[f[0]].coords + vertices[f[1]].coords + vertices[f[2]].coords) / 3.0)
            .collect();
        let prev = &vertices;
        vertices = incident
            .par_iter()
            .enumerate()
            .map(|(v, fs)| {
                if fs.is_empty() {
                    return prev[v];
                }
                let mut delta = Vector3::zeros();
                for &z in fs {
                    let n = &target_normals[z];
                    delta += n * n.dot(&(centroids[z] - prev[v].coords));
                }
                prev[v] + delta / fs.len() as f64
            })
            .collect();
        let e = plane_energy(&vertices, faces, target_normals);
        let last = *energies.last().unwrap();
        assert!(
            e <= last + slack,
            "plane energy rose at pass {pass}: {last:e} -> {e:e}"
        );
        energies.push(e);
    }
    Ok(VertexUpdate {
        mesh: mesh.with_vertices(vertices)?,
        energies,
    })
}

#[derive(Debug, Clone)]
pub struct FineOutcome {
    pub mesh: Mesh,
    pub normals: Vec<Vector3<f64>>,
    pub energies: Vec<f64>,
}

/// Bilateral normal filtering followed by vertex updates toward the filtered normals.
pub fn fine_denoise(mesh: &Mesh, params: &BilateralParams) -> Result<FineOutcome> {
    params.validate()?;
    let geometry = face_geometry(mesh);
    let rings = face_rings(mesh, params.neighborhood);
    let normals = bilateral_normals(&geometry, &rings, params)?;
    let update = update_vertices(mesh, &normals, params.vertex_iterations)?;
    Ok(FineOutcome {
        mesh: update.mesh,
        normals,
        energies: update.energies,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DenoiseConfig {
    pub layout: LayoutConfig,
    pub tracking: TrackingConfig,
}

#[derive(Debug, Clone)]
pub struct CoarseOutcome {
    pub mesh: Mesh,
    pub layout: BlockLayout,
    pub bases: TrackedBases,
}

/// Per-block projection onto the tracked low-frequency basis, stitched.
pub fn coarse_denoise(mesh: &Mesh, cfg: &DenoiseConfig) -> Result<CoarseOutcome> {
    cfg.tracking.validate()?;
    let edges = build_edges(mesh);
    let layout = BlockLayout::build(mesh, &edges, &cfg.layout)?;
    let bases = track_bases(mesh, &layout, &cfg.tracking)?;
    let smoothed = lowpass(mesh.vertices(), &layout, &bases.bases)?;
    Ok(CoarseOutcome {
        mesh: mesh.with_vertices(smoothed)?,
        layout,
        bases,
    })
}

/// Coarse pass, then the fine pass when `fine` is given.
pub fn denoise(mesh: &Mesh, cfg: &DenoiseConfig, fine: Option<&BilateralParams>) -> Result<Mesh> {
    let coarse = coarse_denoise(mesh, cfg)?;
    match fine {
        Some(p) => Ok(fine_denoise(&coarse.mesh, p)?.mesh),
        None => Ok(coarse.mesh),
    }
}

#[derive(Debug, Clone)]
pub struct DynamicOutcome {
    pub frames: Vec<Mesh>,
    pub layout: BlockLayout,
    pub bases: TrackedBases,
    /// Number of times the basis stage ran; always 1.
    pub basis_runs: usize,
    pub basis_seconds: f64,
    pub frame_seconds: f64,
}

/// Denoises frames sharing one connectivity. Bases come from the first frame
/// only; the frames are then filtered independently in parallel.
pub fn denoise_dynamic(
    frames: &[Mesh],
    cfg: &DenoiseConfig,
    fine: Option<&BilateralParams>,
) -> Result<DynamicOutcome> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidArgument("no frames to denoise".into()))?;
    for (i, f) in frames.iter().enumerate().skip(1) {
        if f.vertex_count() != first.vertex_count() || f.faces() != first.faces() {
            return Err(Error::InvalidMesh(format!(
                "frame {i} does not share the first frame's connectivity"
            )));
        }
    }
    if let Some(p) = fine {
        p.validate()?;
    }
    cfg.tracking.validate()?;
    let start = Instant::now();
    let edges = build_edges(first);
    let layout = BlockLayout::build(first, &edges, &cfg.layout)?;
    let bases = track_bases(first, &layout, &cfg.tracking)?;
    let basis_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let out: Vec<Mesh> = frames
        .par_iter()
        .map(|frame| {
            let coarse = frame.with_vertices(lowpass(frame.vertices(), &layout, &bases.bases)?)?;
            match fine {
                Some(p) => Ok(fine_denoise(&coarse, p)?.mesh),
                None => Ok(coarse),
            }
        })
        .collect::<Result<_>>()?;
    Ok(DynamicOutcome {
        frames: out,
        layout,
        bases,
        basis_runs: 1,
        basis_seconds,
        frame_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Bilateral weight graph `C_ij = A_j K_s K_r` over the given neighborhoods,
/// dense, for small face sets. Symmetric only when the areas are equal.
pub fn bilateral_weight_matrix(
    geometry: &FaceGeometry,
    neighborhoods: &[Vec<usize>],
    sigma_s: f64,
    sigma_r: f64,
) -> DMatrix<f64> {
    let l = geometry.len();
    let mut c = DMatrix::zeros(l, l);
    for (i, ring) in neighborhoods.iter().enumerate() {
        for &j in ring {
            c[(i, j)] = geometry.areas[j]
                * spatial_kernel(&geometry.centroids[i], &geometry.centroids[j], sigma_s)
                * range_kernel(&geometry.normals[i], &geometry.normals[j], sigma_r);
        }
    }
    c
}

/// One linear filter pass `D⁻¹ C n` with `D` the row sums of `C`, before renormalization.
pub fn weighted_average(
    normals: &[Vector3<f64>],
    weights: &DMatrix<f64>,
) -> Result<Vec<Vector3<f64>>> {
    let l = normals.len();
    if weights.nrows() != l || weights.ncols() != l {
        return Err(Error::Dimension(format!(
            "{}×{} weights for {l} normals",
            weights.nrows(),
            weights.ncols()
        )));
    }
    (0..l)
        .map(|i| {
            let row = weights.row(i);
            let w: f64 = row.iter().sum();
            if !(w > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "face {i} has no positive weight"
                )));
            }
            Ok(normals
                .iter()
                .zip(row.iter())
                .map(|(n, &c)| n * c)
                .sum::<Vector3<f64>>()
                / w)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    /// Largest absolute entry of `D^{1/2} n̂ − U(I−Λ)Uᵀ D^{1/2} n`.
    pub max_deviation: f64,
    /// `1 − λ_i` for the normalized Laplacian eigenvalues, ascending in `λ`.
    pub response: Vec<f64>,
}

/// Compares the direct filter output with its spectral form under the
/// symmetric-normalized Laplacian `I − D^{-1/2} C D^{-1/2}` of the weights.
pub fn bilateral_spectral_identity_check(
    normals: &[Vector3<f64>],
    weights: &DMatrix<f64>,
) -> Result<IdentityReport> {
    let l = normals.len();
    if l > 500 {
        return Err(Error::InvalidArgument(format!(
            "{l} faces is too many for the dense check"
        )));
    }
    let scale = weights.amax().max(f64::MIN_POSITIVE);
    if (weights - weights.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidArgument(
            "weight matrix is not symmetric".into(),
        ));
    }
    let filtered = weighted_average(normals, weights)?;
    let d: Vec<f64> = (0..l).map(|i| weights.row(i).sum()).collect();
    let sqrt_d: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
    let lap = DMatrix::from_fn(l, l, |i, j| {
        let off = weights[(i, j)] / (sqrt_d[i] * sqrt_d[j]);
        if i == j {
            1.0 - off
        } else {
            -off
        }
    });
    let spectrum = symmetric_eigen(lap)?;
    let u = &spectrum.eigenvectors;
    let response: Vec<f64> = spectrum.eigenvalues.iter().map(|lam| 1.0 - lam).collect();
    let scaled = DMatrix::from_fn(l, 3, |i, a| sqrt_d[i] * normals[i][a]);
    let mut coeffs = u.transpose() * scaled;
    for (r, mut row) in coeffs.row_iter_mut().enumerate() {
        row *= response[r];
    }
    let predicted = u * coeffs;
    let mut max_deviation: f64 = 0.0;
    for i in 0..l {
        for a in 0..3 {
            max_deviation =
                max_deviation.max((sqrt_d[i] * filtered[i][a] - predicted[(i, a)]).abs());
        }
    }
    Ok(IdentityReport {
        max_deviation,
        response,
    })
}

/// Face normals of `vertices` over `faces`, zero for degenerate faces.
pub fn face_normals(vertices: &[Point3<f64>], faces: &[[usize; 3]]) -> Vec<Vector3<f64>> {
    face_geometry_of(vertices, faces).normals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{add_gaussian_noise, shapes};
    use crate::metrics::{mean_angle_theta, mnd};
    use crate::pipeline::SubspaceSize;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        loop {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.norm() > 0.1 {
                return v.normalize();
            }
        }
    }

    fn plane_rms(mesh: &Mesh) -> f64 {
        let s: f64 = mesh.vertices().iter().map(|p| p.z * p.z).sum();
        (s / mesh.vertex_count() as f64).sqrt()
    }

    #[test]
    fn kernels_are_one_at_zero_distance() {
        let p = Point3::new(0.3, -1.0, 2.0);
        let n = Vector3::new(0.0, 0.6, 0.8);
        assert_eq!(spatial_kernel(&p, &p, 0.1), 1.0);
        assert_eq!(range_kernel(&n, &n, 0.1), 1.0);
        let k = range_kernel(&n, &-n, 0.35);
        assert!(k > 0.0 && k < 1.0);
    }

    #[test]
    fn identical_normals_are_a_fixed_point() {
        let mesh = shapes::grid(8, 8);
        let g = face_geometry(&mesh);
        let out =
            bilateral_normals(&g, &face_rings(&mesh, 1), &BilateralParams::default()).unwrap();
        for (a, b) in out.iter().zip(&g.normals) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn two_faces_with_wide_kernels_average() {
        let n0 = Vector3::new(0.0, 0.0, 1.0);
        let n1 = Vector3::new(1.0, 0.0, 0.0);
        let g = FaceGeometry {
            centroids: vec![Point3::origin(); 2],
            normals: vec![n0, n1],
            areas: vec![0.5, 0.5],
            degenerate: vec![false; 2],
        };
        let params = BilateralParams {
            sigma_s: Some(1.0),
            sigma_r: 1e9,
            normal_iterations: 1,
            ..Default::default()
        };
        let out = bilateral_normals(&g, &[vec![0, 1], vec![0, 1]], &params).unwrap();
        let mean = ((n0 + n1) / 2.0).normalize();
        assert!((out[0] - mean).norm() < 1e-12);
        assert!((out[1] - mean).norm() < 1e-12);
    }

    #[test]
    fn filtered_normals_are_unit_and_closer_to_truth() {
        let clean = shapes::cube(8);
        let noisy = add_gaussian_noise(&clean, 0.1, 3).unwrap();
        let truth = face_geometry(&clean).normals;
        let g = face_geometry(&noisy);
        let out =
            bilateral_normals(&g, &face_rings(&noisy, 1), &BilateralParams::default()).unwrap();
        for n in &out {
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
        let before = mean_angle_theta(&truth, &g.normals).unwrap();
        let after = mean_angle_theta(&truth, &out).unwrap();
        assert!(after < before, "{after} vs {before}");
    }

    #[test]
    fn rings_grow_with_depth() {
        let mesh = shapes::grid(10, 10);
        let r1 = face_rings(&mesh, 1);
        let r2 = face_rings(&mesh, 2);
        let f = 90;
        assert!(r2[f].len() > r1[f].len());
        assert!(r1[f].iter().all(|x| r2[f].binary_search(x).is_ok()));
    }

    #[test]
    fn consistent_vertices_are_a_fixed_point() {
        let mesh = shapes::grid(6, 6);
        let normals = face_geometry(&mesh).normals;
        let out = update_vertices(&mesh, &normals, 5).unwrap();
        for (a, b) in out.mesh.vertices().iter().zip(mesh.vertices()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn single_triangle_energy_strictly_decreases() {
        let mesh = Mesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.4),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let out = update_vertices(&mesh, &[Vector3::z()], 10).unwrap();
        // A lone face lands on its plane in one pass; after that there is nothing left to remove.
        for w in out.energies.windows(2) {
            assert!(w[1] < w[0] || w[0] == 0.0, "{:?}", out.energies);
        }
        assert!(out.energies[1] < 1e-30);
    }

    #[test]
    fn perturbed_plane_vertex_returns() {
        let mesh = shapes::grid(7, 7);
        let truth = face_geometry(&mesh).normals;
        let mut v = mesh.vertices().to_vec();
        let idx = 3 * 7 + 3;
        v[idx].z += 0.3;
        let bumped = mesh.with_vertices(v).unwrap();
        let out = update_vertices(&bumped, &truth, 3000).unwrap();
        // Translation along the normal costs nothing, so the plane it settles
        // on is flat but not necessarily z = 0.
        let level = out.mesh.vertices()[0].z;
        assert!((out.mesh.vertices()[idx].z - level).abs() < 1e-6);
        assert!(out
            .mesh
            .vertices()
            .iter()
            .all(|p| (p.z - level).abs() < 1e-6));
        assert!(level.abs() < 0.3);
    }

    #[test]
    fn energy_never_rises_on_noisy_shapes() {
        for (i, mesh) in [
            shapes::cube(6),
            shapes::icosphere(2),
            shapes::torus(24, 12, 2.0, 0.7),
        ]
        .iter()
        .enumerate()
        {
            let noisy = add_gaussian_noise(mesh, 0.2, i as u64).unwrap();
            let rings = face_rings(&noisy, 1);
            let normals =
                bilateral_normals(&face_geometry(&noisy), &rings, &BilateralParams::default())
                    .unwrap();
            let out = update_vertices(&noisy, &normals, 25).unwrap();
            assert!(out.energies.last().unwrap() < &out.energies[0]);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let bad = [
            BilateralParams {
                sigma_r: 0.0,
                ..Default::default()
            },
            BilateralParams {
                sigma_s: Some(-1.0),
                ..Default::default()
            },
            BilateralParams {
                normal_iterations: 0,
                ..Default::default()
            },
            BilateralParams {
                neighborhood: 0,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(p.validate().is_err());
        }
    }

    #[test]
    fn two_face_identity_closed_form() {
        let w = 0.7;
        let c = DMatrix::from_row_slice(2, 2, &[1.0, w, w, 1.0]);
        let n = vec![Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0)];
        let r = bilateral_spectral_identity_check(&n, &c).unwrap();
        assert!(r.max_deviation < 1e-15);
        // Eigenvalues of I − C/(1+w) are 0 and 2w/(1+w).
        assert_relative_eq!(r.response[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.response[1], 1.0 - 2.0 * w / (1.0 + w), epsilon = 1e-15);
    }

    #[test]
    fn random_graph_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = 50;
        let mut c = DMatrix::zeros(l, l);
        for i in 0..l {
            c[(i, i)] = 1.0;
            for j in 0..i {
                if rng.random_bool(0.2) {
                    let w: f64 = rng.random_range(0.01..1.0);
                    c[(i, j)] = w;
                    c[(j, i)] = w;
                }
            }
        }
        let n: Vec<_> = (0..l).map(|_| unit(&mut rng)).collect();
        let r = bilateral_spectral_identity_check(&n, &c).unwrap();
        assert!(r.max_deviation < 1e-9, "{}", r.max_deviation);
        assert!((r.response[0] - 1.0).abs() < 1e-12);
        assert!(r
            .response
            .iter()
            .all(|x| *x <= 1.0 + 1e-12 && *x >= -1.0 - 1e-12));
    }

    #[test]
    fn identity_rejects_asymmetric_weights() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        let n = vec![Vector3::x(), Vector3::y()];
        assert!(bilateral_spectral_identity_check(&n, &c).is_err());
    }

    #[test]
    fn mesh_filter_pass_matches_weight_matrix_on_equal_areas() {
        // Flat grid: equal areas so the bilateral weights are symmetric.
        let mesh = shapes::grid(5, 5);
        let mut g = face_geometry(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in g.normals.iter_mut() {
            *n = (Vector3::z() + 0.3 * unit(&mut rng)).normalize();
        }
        let rings = face_rings(&mesh, 1);
        let params = BilateralParams {
            sigma_s: Some(0.8),
            normal_iterations: 1,
            ..Default::default()
        };
        let direct = bilateral_normals(&g, &rings, &params).unwrap();
        let c = bilateral_weight_matrix(&g, &rings, 0.8, params.sigma_r);
        let linear = weighted_average(&g.normals, &c).unwrap();
        for (a, b) in direct.iter().zip(&linear) {
            assert!((a - b.normalize()).norm() < 1e-12);
        }
        let r = bilateral_spectral_identity_check(&g.normals, &c).unwrap();
        assert!(r.max_deviation < 1e-9);
    }

    fn coarse_cfg(c: SubspaceSize, k: usize) -> DenoiseConfig {
        DenoiseConfig {
            layout: LayoutConfig {
                k,
                ..Default::default()
            },
            tracking: TrackingConfig {
                c,
                ..Default::default()
            },
        }
    }

    #[test]
    fn complete_basis_is_identity() {
        let mesh = add_gaussian_noise(&shapes::icosphere(2), 0.1, 0).unwrap();
        let out = coarse_denoise(&mesh, &coarse_cfg(SubspaceSize::Fraction(1.0), 1)).unwrap();
        for (a, b) in out.mesh.vertices().iter().zip(mesh.vertices()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn coarse_pulls_noisy_plane_toward_plane() {
        let plane = shapes::grid(20, 20);
        let noisy = add_gaussian_noise(&plane, 0.1, 4).unwrap();
        let out = coarse_denoise(&noisy, &coarse_cfg(SubspaceSize::Fraction(0.1), 2)).unwrap();
        assert!(plane_rms(&out.mesh) < plane_rms(&noisy));
        assert_eq!(out.mesh.faces(), noisy.faces());
    }

    #[test]
    fn coarse_then_fine_beats_fine_only() {
        let clean = shapes::cube(10);
        let noisy = add_gaussian_noise(&clean, 0.15, 9).unwrap();
        let truth = face_geometry(&clean).normals;
        let params = BilateralParams::default();
        let fine_only = fine_denoise(&noisy, &params).unwrap();
        let both = denoise(
            &noisy,
            &coarse_cfg(SubspaceSize::Fraction(0.3), 1),
            Some(&params),
        )
        .unwrap();
        let m_fine = mnd(
            &truth,
            &face_normals(fine_only.mesh.vertices(), clean.faces()),
        )
        .unwrap();
        let m_both = mnd(&truth, &face_normals(both.vertices(), clean.faces())).unwrap();
        assert!(m_both < m_fine, "{m_both} vs {m_fine}");
    }

    #[test]
    fn clean_mesh_with_converged_normals_is_unchanged() {
        let mesh = shapes::grid(8, 8);
        let out = fine_denoise(&mesh, &BilateralParams::default()).unwrap();
        for (a, b) in out.mesh.vertices().iter().zip(mesh.vertices()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn dynamic_single_frame_matches_coarse() {
        let mesh = add_gaussian_noise(&shapes::torus(20, 10, 2.0, 0.6), 0.1, 1).unwrap();
        let cfg = coarse_cfg(SubspaceSize::Fraction(0.2), 2);
        let single = denoise_dynamic(std::slice::from_ref(&mesh), &cfg, None).unwrap();
        let coarse = coarse_denoise(&mesh, &cfg).unwrap();
        assert_eq!(single.frames[0].vertices(), coarse.mesh.vertices());
        assert_eq!(single.basis_runs, 1);
    }

    #[test]
    fn dynamic_frames_are_order_independent() {
        let base = shapes::torus(20, 10, 2.0, 0.6);
        let frames: Vec<Mesh> = (0..8)
            .map(|s| add_gaussian_noise(&base, 0.1, s).unwrap())
            .collect();
        let cfg = coarse_cfg(SubspaceSize::Fraction(0.2), 2);
        let fwd = denoise_dynamic(&frames, &cfg, None).unwrap();
        // Reversing the frames must not change the basis (first frame fixed) or any output.
        let mut perm = frames.clone();
        perm[1..].reverse();
        let rev = denoise_dynamic(&perm, &cfg, None).unwrap();
        for i in 1..8 {
            assert_eq!(fwd.frames[i].vertices(), rev.frames[8 - i].vertices());
        }
        let same = denoise_dynamic(&vec![frames[0].clone(); 3], &cfg, None).unwrap();
        assert_eq!(same.frames[0].vertices(), same.frames[2].vertices());
    }

    #[test]
    fn dynamic_rejects_connectivity_mismatch() {
        let a = shapes::grid(5, 5);
        let b = shapes::random_edge_flips(&a, 0.3, 1);
        let cfg = coarse_cfg(SubspaceSize::Fraction(0.2), 1);
        assert!(denoise_dynamic(&[a, b], &cfg, None).is_err());
        assert!(denoise_dynamic(&[], &cfg, None).is_err());
    }
}
