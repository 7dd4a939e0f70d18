//! Synthetic test corpus shared by the integration tests.
#![allow(dead_code)]

use nalgebra::Point3;
use spectral_mesh::mesh::{shapes, vertex_faces, Mesh};

/// Bumpy torus with randomly flipped edges, so neither geometry nor
/// connectivity carries the torus symmetries.
pub fn irregular_torus(nu: usize, nv: usize, seed: u64) -> Mesh {
    let base = shapes::bumpy(&shapes::torus(nu, nv, 3.0, 1.0), 0.06, 5, seed);
    shapes::random_edge_flips(&base, 0.15, seed)
}

pub fn irregular_sphere(level: u32, seed: u64) -> Mesh {
    let base = shapes::bumpy(&shapes::icosphere(level), 0.05, 4, seed);
    shapes::random_edge_flips(&base, 0.15, seed)
}

/// Torus whose ripple amplitude grows around the ring: flat on one side,
/// detailed on the other.
pub fn graded_torus(nu: usize, nv: usize) -> Mesh {
    let (major, minor) = (3.0, 1.0);
    let base = shapes::torus(nu, nv, major, minor);
    let v: Vec<Point3<f64>> = base
        .vertices()
        .iter()
        .map(|p| {
            let u = p.y.atan2(p.x);
            let ring = (p.x * p.x + p.y * p.y).sqrt();
            let w = p.z.atan2(ring - major);
            let amp = 0.12 * (0.5 + 0.5 * u.cos()).powi(2);
            let bump = amp * (7.0 * u).sin() * (5.0 * w).sin();
            let r = minor + bump;
            Point3::new(
                (major + r * w.cos()) * u.cos(),
                (major + r * w.cos()) * u.sin(),
                r * w.sin(),
            )
        })
        .collect();
    base.with_vertices(v).unwrap()
}

/// The synthetic corpus: (name, mesh).
pub fn corpus() -> Vec<(&'static str, Mesh)> {
    vec![
        ("irregular-torus", irregular_torus(64, 32, 1)),
        ("irregular-sphere", irregular_sphere(4, 2)),
        ("graded-torus", graded_torus(72, 36)),
        ("cube", shapes::cube(16)),
        ("grid", shapes::grid(40, 40)),
    ]
}

pub fn mean_faces_per_vertex(mesh: &Mesh) -> f64 {
    let vf = vertex_faces(mesh);
    vf.iter().map(Vec::len).sum::<usize>() as f64 / vf.len() as f64
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// One PASS/FAIL line per criterion, then the assertion.
pub fn verdict(id: u32, pass: bool, detail: String) {
    println!(
        "{} criterion {id:>2}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}
