//! Triangle meshes, derived connectivity and per-face geometry.

mod io;
pub mod shapes;

pub use io::{
    load_mesh, load_obj, load_off, read_obj, read_off, save_mesh, write_obj, write_off, MeshFormat,
};

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// An indexed triangle mesh.
///
/// Construction validates that every face references existing vertices and
/// has three distinct corners. Instances are immutable; operations that move
/// vertices return a new mesh sharing the same face list.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidMesh(format!(
                "need at least 3 vertices, got {n}"
            )));
        }
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex {bad} but mesh has {n} vertices"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} is degenerate: {f:?}"
                )));
            }
        }
        if let Some(i) = vertices
            .iter()
            .position(|p| !p.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidMesh(format!(
                "vertex {i} has non-finite coordinates"
            )));
        }
        Ok(Mesh { vertices, faces })
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    #[inline]
    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    #[inline]
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Same connectivity, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point3<f64>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Dimension(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(Mesh {
            vertices,
            faces: self.faces.clone(),
        })
    }

    /// Axis-aligned bounding box diagonal length.
    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.vertices)
    }
}

pub(crate) fn bbox_diagonal(points: &[Point3<f64>]) -> f64 {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(&p.coords);
        hi = hi.sup(&p.coords);
    }
    if points.is_empty() {
        0.0
    } else {
        (hi - lo).norm()
    }
}

/// Undirected vertex adjacency derived from the face list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    neighbors: Vec<Vec<usize>>,
}

impl EdgeSet {
    /// Sorted neighbour list N(i).
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Iterates each undirected edge once as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Connected components as a per-vertex label, labels in order of first vertex.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.neighbors.len();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &w in &self.neighbors[v] {
                    if label[w] == usize::MAX {
                        label[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }
}

/// Builds the undirected edge set of the union of all face edges.
pub fn build_edges(mesh: &Mesh) -> EdgeSet {
    let mut neighbors = vec![Vec::new(); mesh.vertex_count()];
    for f in mesh.faces() {
        for k in 0..3 {
            let a = f[k];
            let b = f[(k + 1) % 3];
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
    }
    for ns in &mut neighbors {
        ns.sort_unstable();
        ns.dedup();
    }
    EdgeSet { neighbors }
}

/// Mean Euclidean edge length over the unique edges.
pub fn mean_edge_length(mesh: &Mesh, edges: &EdgeSet) -> f64 {
    let v = mesh.vertices();
    let (sum, count) = edges.edges().fold((0.0, 0usize), |(s, c), (i, j)| {
        (s + (v[i] - v[j]).norm(), c + 1)
    });
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Centroid, outward unit normal and area of every face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceGeometry {
    pub centroids: Vec<Point3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub areas: Vec<f64>,
    /// `true` for faces whose cross product vanished; their normal is zero.
    pub degenerate: Vec<bool>,
}

impl FaceGeometry {
    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }
}

pub fn face_geometry(mesh: &Mesh) -> FaceGeometry {
    face_geometry_of(mesh.vertices(), mesh.faces())
}

pub(crate) fn face_geometry_of(vertices: &[Point3<f64>], faces: &[[usize; 3]]) -> FaceGeometry {
    let l = faces.len();
    let mut out = FaceGeometry {
        centroids: Vec::with_capacity(l),
        normals: Vec::with_capacity(l),
        areas: Vec::with_capacity(l),
        degenerate: Vec::with_capacity(l),
    };
    for f in faces {
        let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
        out.centroids
            .push(Point3::from((a.coords + b.coords + c.coords) / 3.0));
        let cross = (b - a).cross(&(c - a));
        let norm = cross.norm();
        // Relative test so tiny but valid triangles keep their normal.
        let scale = (b - a).norm_squared().max((c - a).norm_squared());
        if norm > 0.0 && norm > 1e-14 * scale {
            out.normals.push(cross / norm);
            out.degenerate.push(false);
        } else {
            out.normals.push(Vector3::zeros());
            out.degenerate.push(true);
        }
        out.areas.push(0.5 * norm);
    }
    out
}

/// Incident-face lists per vertex, ascending face index.
pub fn vertex_faces(mesh: &Mesh) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); mesh.vertex_count()];
    for (fi, f) in mesh.faces().iter().enumerate() {
        for &v in f {
            out[v].push(fi);
        }
    }
    out
}

/// For each face, the faces sharing at least one vertex with it (itself included), ascending.
pub fn face_neighborhoods(mesh: &Mesh) -> Vec<Vec<usize>> {
    let vf = vertex_faces(mesh);
    mesh.faces()
        .iter()
        .map(|f| {
            let mut ring: Vec<usize> = f.iter().flat_map(|&v| vf[v].iter().copied()).collect();
            ring.sort_unstable();
            ring.dedup();
            ring
        })
        .collect()
}

/// Perturbs every coordinate with i.i.d. zero-mean Gaussian noise of standard
/// deviation `sigma` times the mean edge length.
pub fn add_gaussian_noise(mesh: &Mesh, sigma: f64, seed: u64) -> Result<Mesh> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise sigma must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(mesh.clone());
    }
    let scale = sigma * mean_edge_length(mesh, &build_edges(mesh));
    let normal = Normal::new(0.0, scale)
        .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices = mesh
        .vertices()
        .iter()
        .map(|p| {
            Point3::new(
                p.x + normal.sample(&mut rng),
                p.y + normal.sample(&mut rng),
                p.z + normal.sample(&mut rng),
            )
        })
        .collect();
    mesh.with_vertices(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tri() -> Mesh {
        Mesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_faces() {
        let v = vec![Point3::origin(); 3];
        assert!(Mesh::new(v.clone(), vec![[0, 1, 3]]).is_err());
        assert!(Mesh::new(v.clone(), vec![[0, 1, 1]]).is_err());
        assert!(Mesh::new(v, vec![]).is_err());
    }

    #[test]
    fn single_triangle_edges() {
        let e = build_edges(&tri());
        assert_eq!(e.neighbors(0), &[1, 2]);
        assert_eq!(e.neighbors(1), &[0, 2]);
        assert_eq!(e.neighbors(2), &[0, 1]);
        assert_eq!(e.edge_count(), 3);
    }

    #[test]
    fn shared_edge_degree() {
        let m = Mesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        assert_eq!(build_edges(&m).degree(1), 3);
    }

    #[test]
    fn tetrahedron_is_k4() {
        let m = shapes::tetrahedron();
        let e = build_edges(&m);
        for i in 0..4 {
            assert_eq!(e.degree(i), 3);
        }
    }

    #[test]
    fn unit_triangle_geometry() {
        let g = face_geometry(&tri());
        assert_relative_eq!(
            g.centroids[0],
            Point3::new(1.0 / 3.0, 1.0 / 3.0, 0.0),
            epsilon = 1e-15
        );
        assert_relative_eq!(g.normals[0], Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        assert_relative_eq!(g.areas[0], 0.5);

        let flipped = Mesh::new(tri().vertices().to_vec(), vec![[0, 2, 1]]).unwrap();
        assert_relative_eq!(
            face_geometry(&flipped).normals[0],
            Vector3::new(0.0, 0.0, -1.0)
        );
    }

    #[test]
    fn zero_area_face_flagged() {
        let m = Mesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let g = face_geometry(&m);
        assert!(g.degenerate[0]);
        assert_eq!(g.normals[0], Vector3::zeros());
        assert_eq!(g.areas[0], 0.0);
    }

    #[test]
    fn sphere_normals_point_outward() {
        let m = shapes::icosphere(3);
        let g = face_geometry(&m);
        for (n, c) in g.normals.iter().zip(&g.centroids) {
            let radial = c.coords.normalize();
            assert!(n.dot(&c.coords) > 0.0);
            assert!(n.dot(&radial) > 0.98);
        }
    }

    #[test]
    fn closed_surface_area_weighted_normals_cancel() {
        for m in [
            shapes::icosphere(2),
            shapes::torus(24, 12, 1.0, 0.3),
            shapes::cube(6),
        ] {
            let g = face_geometry(&m);
            let total: f64 = g.areas.iter().sum();
            let sum = g
                .normals
                .iter()
                .zip(&g.areas)
                .fold(Vector3::zeros(), |acc, (n, a)| acc + n * *a);
            assert!(sum.norm() < 1e-9 * total, "{}", sum.norm());
        }
    }

    #[test]
    fn noise_is_deterministic_and_zero_sigma_identity() {
        let m = shapes::icosphere(2);
        assert_eq!(add_gaussian_noise(&m, 0.0, 1).unwrap(), m);
        let a = add_gaussian_noise(&m, 0.2, 7).unwrap();
        let b = add_gaussian_noise(&m, 0.2, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, m);
        assert!(add_gaussian_noise(&m, -1.0, 7).is_err());
    }

    #[test]
    fn noise_sample_std_matches_scaled_sigma() {
        // ~98k coordinates.
        let m = shapes::torus(256, 128, 1.0, 0.35);
        let ell = mean_edge_length(&m, &build_edges(&m));
        let noisy = add_gaussian_noise(&m, 0.2, 11).unwrap();
        let diffs: Vec<f64> = m
            .vertices()
            .iter()
            .zip(noisy.vertices())
            .flat_map(|(a, b)| (b - a).iter().copied().collect::<Vec<_>>())
            .collect();
        assert!(diffs.len() >= 60_000);
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
        let rel = (var.sqrt() - 0.2 * ell).abs() / (0.2 * ell);
        assert!(rel < 0.05, "relative std error {rel}");
    }

    #[test]
    fn components_of_two_triangles() {
        let m = Mesh::new(
            (0..6)
                .map(|i| Point3::new(i as f64, (i % 2) as f64, 0.0))
                .collect(),
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let (label, count) = build_edges(&m).components();
        assert_eq!(count, 2);
        assert_eq!(label, vec![0, 0, 0, 1, 1, 1]);
    }
}
