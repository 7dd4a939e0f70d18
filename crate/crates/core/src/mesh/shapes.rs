//! Procedural test meshes.
//!
//! These stand in for scanned and CAD models: `icosphere`/`bumpy` produce
//! smooth organic surfaces, `cube` gives sharp creases, `torus` and `grid`
//! give regular connectivity, and `random_edge_flips` breaks that regularity
//! without moving any vertex.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{face_geometry, vertex_faces, Mesh};

fn build(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Mesh {
    Mesh::new(vertices, faces).expect("procedural mesh is valid")
}

pub fn tetrahedron() -> Mesh {
    build(
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ],
        vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
    )
}

/// Flat `nx` x `ny` vertex lattice in the z = 0 plane with unit spacing.
pub fn grid(nx: usize, ny: usize) -> Mesh {
    assert!(nx >= 2 && ny >= 2);
    let vertices = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| Point3::new(i as f64, j as f64, 0.0)))
        .collect();
    let id = |i: usize, j: usize| j * nx + i;
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    build(vertices, faces)
}

/// Unit sphere by repeated 4:1 subdivision of an icosahedron (10·4^level + 2 vertices).
pub fn icosphere(level: u32) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::from(Vector3::new(x, y, z).normalize()))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point3<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = (vertices[a].coords + vertices[b].coords).normalize();
                vertices.push(Point3::from(m));
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    build(vertices, faces)
}

/// Torus with `nu` samples around the main ring and `nv` around the tube.
pub fn torus(nu: usize, nv: usize, major: f64, minor: f64) -> Mesh {
    assert!(nu >= 3 && nv >= 3);
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * PI * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            vertices.push(Point3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    build(vertices, faces)
}

/// Surface of the cube [-1, 1]^3 with `n` segments per edge (6n² + 2 vertices).
pub fn cube(n: usize) -> Mesh {
    assert!(n >= 1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let scale = 2.0 / n as f64;
    let mut vid = |p: [usize; 3], vertices: &mut Vec<Point3<f64>>| -> usize {
        *index.entry(p).or_insert_with(|| {
            vertices.push(Point3::new(
                p[0] as f64 * scale - 1.0,
                p[1] as f64 * scale - 1.0,
                p[2] as f64 * scale - 1.0,
            ));
            vertices.len() - 1
        })
    };
    for axis in 0..3 {
        let (ua, va) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for i in 0..n {
                for j in 0..n {
                    let corner = |di: usize, dj: usize| {
                        let mut p = [0usize; 3];
                        p[axis] = side;
                        p[ua] = i + di;
                        p[va] = j + dj;
                        p
                    };
                    let a = vid(corner(0, 0), &mut vertices);
                    let b = vid(corner(1, 0), &mut vertices);
                    let c = vid(corner(1, 1), &mut vertices);
                    let d = vid(corner(0, 1), &mut vertices);
                    if side == n {
                        faces.push([a, b, c]);
                        faces.push([a, c, d]);
                    } else {
                        faces.push([a, c, b]);
                        faces.push([a, d, c]);
                    }
                }
            }
        }
    }
    build(vertices, faces)
}

/// Area-weighted vertex normals (zero for isolated vertices).
pub fn vertex_normals(mesh: &Mesh) -> Vec<Vector3<f64>> {
    let g = face_geometry(mesh);
    vertex_faces(mesh)
        .iter()
        .map(|fs| {
            let s = fs
                .iter()
                .fold(Vector3::zeros(), |acc, &f| acc + g.normals[f] * g.areas[f]);
            let n = s.norm();
            if n > 0.0 {
                s / n
            } else {
                s
            }
        })
        .collect()
}

/// Displaces vertices along their normals by a smooth random field made of
/// `waves` superposed plane waves; `amplitude` is in model units.
pub fn bumpy(mesh: &Mesh, amplitude: f64, waves: usize, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag = mesh.bbox_diagonal().max(1e-12);
    let field: Vec<(Vector3<f64>, f64)> = (0..waves)
        .map(|_| {
            let dir = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let freq = rng.random_range(2.0..9.0) * 2.0 * PI / diag;
            (dir.normalize() * freq, rng.random_range(0.0..2.0 * PI))
        })
        .collect();
    let normals = vertex_normals(mesh);
    let vertices = mesh
        .vertices()
        .iter()
        .zip(&normals)
        .map(|(p, n)| {
            let h: f64 = field
                .iter()
                .map(|(k, ph)| (k.dot(&p.coords) + ph).sin())
                .sum();
            p + n * (amplitude * h / (waves.max(1) as f64).sqrt())
        })
        .collect();
    mesh.with_vertices(vertices).expect("same vertex count")
}

/// Flips roughly `fraction` of the interior edges at random, keeping every
/// vertex degree at least 3 and rejecting flips that fold the surface.
pub fn random_edge_flips(mesh: &Mesh, fraction: f64, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let verts = mesh.vertices();
    let mut faces = mesh.faces().to_vec();
    let mut degree = vec![0usize; mesh.vertex_count()];
    for (i, j) in super::build_edges(mesh).edges() {
        degree[i] += 1;
        degree[j] += 1;
    }
    let normal = |f: &[usize; 3]| (verts[f[1]] - verts[f[0]]).cross(&(verts[f[2]] - verts[f[0]]));
    // A few passes; faces touched in a pass are frozen until the next one.
    for _ in 0..4 {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                directed.insert((f[k], f[(k + 1) % 3]), fi);
            }
        }
        let mut touched = vec![false; faces.len()];
        let mut keys: Vec<(usize, usize)> =
            directed.keys().copied().filter(|(a, b)| a < b).collect();
        keys.sort_unstable();
        for (a, b) in keys {
            if !rng.random_bool((fraction / 4.0).clamp(0.0, 1.0)) {
                continue;
            }
            let (Some(&f1), Some(&f2)) = (directed.get(&(a, b)), directed.get(&(b, a))) else {
                continue;
            };
            if touched[f1] || touched[f2] {
                continue;
            }
            let opp = |f: &[usize; 3], x: usize, y: usize| {
                *f.iter().find(|&&v| v != x && v != y).unwrap()
            };
            let c = opp(&faces[f1], a, b);
            let d = opp(&faces[f2], a, b);
            if c == d || degree[a] <= 4 || degree[b] <= 4 {
                continue;
            }
            if directed.contains_key(&(c, d)) || directed.contains_key(&(d, c)) {
                continue;
            }
            let n1 = [a, d, c];
            let n2 = [d, b, c];
            let old = normal(&faces[f1]) + normal(&faces[f2]);
            let (m1, m2) = (normal(&n1), normal(&n2));
            let ok =
                |m: Vector3<f64>| m.norm() > 1e-12 && m.normalize().dot(&old.normalize()) > 0.5;
            if !ok(m1) || !ok(m2) {
                continue;
            }
            faces[f1] = n1;
            faces[f2] = n2;
            touched[f1] = true;
            touched[f2] = true;
            degree[a] -= 1;
            degree[b] -= 1;
            degree[c] += 1;
            degree[d] += 1;
            directed.remove(&(a, b));
            directed.remove(&(b, a));
            for (fi, f) in [(f1, n1), (f2, n2)] {
                for k in 0..3 {
                    directed.insert((f[k], f[(k + 1) % 3]), fi);
                }
            }
        }
    }
    build(verts.to_vec(), faces)
}

/// Uniformly rescales so that the bounding-box diagonal equals `diag`.
pub fn rescale(mesh: &Mesh, diag: f64) -> Mesh {
    let s = diag / mesh.bbox_diagonal();
    let vertices = mesh
        .vertices()
        .iter()
        .map(|p| Point3::from(p.coords * s))
        .collect();
    mesh.with_vertices(vertices).expect("same vertex count")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_edges;

    #[test]
    fn vertex_counts() {
        assert_eq!(icosphere(0).vertex_count(), 12);
        assert_eq!(icosphere(3).vertex_count(), 642);
        assert_eq!(cube(4).vertex_count(), 6 * 16 + 2);
        assert_eq!(torus(10, 6, 1.0, 0.3).vertex_count(), 60);
        assert_eq!(grid(10, 10).vertex_count(), 100);
    }

    #[test]
    fn closed_meshes_are_two_manifold() {
        for m in [icosphere(2), cube(5), torus(12, 8, 1.0, 0.3)] {
            let mut directed = HashMap::new();
            for f in m.faces() {
                for k in 0..3 {
                    assert!(directed.insert((f[k], f[(k + 1) % 3]), ()).is_none());
                }
            }
            for &(a, b) in directed.keys() {
                assert!(directed.contains_key(&(b, a)));
            }
        }
    }

    #[test]
    fn edge_flips_preserve_counts_and_change_degrees() {
        let m = icosphere(3);
        let f = random_edge_flips(&m, 0.3, 5);
        assert_eq!(f.face_count(), m.face_count());
        assert_eq!(build_edges(&f).edge_count(), build_edges(&m).edge_count());
        let degs = |m: &Mesh| {
            let e = build_edges(m);
            (0..m.vertex_count())
                .map(|i| e.degree(i))
                .collect::<Vec<_>>()
        };
        assert_ne!(degs(&f), degs(&m));
        assert!(degs(&f).iter().all(|&d| d >= 3));
        assert_eq!(random_edge_flips(&m, 0.3, 5), f);
    }
}
