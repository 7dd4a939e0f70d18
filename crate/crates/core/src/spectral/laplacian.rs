use nalgebra::{DMatrix, Point3};

use crate::error::{Error, Result};
use crate::partition::Submesh;

/// Edge weighting used for the connectivity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// `C_ij = 1` on edges: depends on connectivity only.
    #[default]
    Binary,
    /// `C_ij = 1 / ||v_i - v_j||²` on edges.
    InverseSquaredDistance,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Weighting::Binary),
            "distance" | "inverse-squared-distance" => Ok(Weighting::InverseSquaredDistance),
            other => Err(Error::InvalidArgument(format!(
                "unknown weighting {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weighting::Binary => "binary",
            Weighting::InverseSquaredDistance => "distance",
        })
    }
}

/// Sparse symmetric `L = D - C` with `D_ii = |N(i)|`.
///
/// The degree matrix counts neighbours even when `C` is distance weighted,
/// so rows of a weighted Laplacian do not sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    diag: Vec<f64>,
    /// Off-diagonal entries `(j, -C_ij)`, ascending `j`.
    rows: Vec<Vec<(usize, f64)>>,
    weighting: Weighting,
}

impl Laplacian {
    #[inline]
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    #[inline]
    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    #[inline]
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of row `i` as `(column, value)`.
    #[inline]
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Lower bound on the smallest eigenvalue from Gershgorin discs.
    pub fn gershgorin_lower_bound(&self) -> f64 {
        self.diag
            .iter()
            .zip(&self.rows)
            .map(|(d, r)| d - r.iter().map(|(_, v)| v.abs()).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute Gershgorin radius, an upper bound on `||L||_2`.
    pub fn gershgorin_norm_bound(&self) -> f64 {
        self.diag
            .iter()
            .zip(&self.rows)
            .map(|(d, r)| d.abs() + r.iter().map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &(j, v) in &self.rows[i] {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.size())
            .map(|i| self.diag[i] * x[i] + self.rows[i].iter().map(|&(j, v)| v * x[j]).sum::<f64>())
            .collect()
    }

    /// Builds `L` from local adjacency lists and local positions.
    pub fn from_adjacency(
        neighbors: &[Vec<usize>],
        positions: &[Point3<f64>],
        weighting: Weighting,
    ) -> Result<Self> {
        let n = neighbors.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "Laplacian needs at least 2 vertices, got {n}"
            )));
        }
        if positions.len() != n {
            return Err(Error::Dimension(format!(
                "{} positions for {n} vertices",
                positions.len()
            )));
        }
        let mut rows = Vec::with_capacity(n);
        for (i, ns) in neighbors.iter().enumerate() {
            let mut row = Vec::with_capacity(ns.len());
            for &j in ns {
                if j == i {
                    continue;
                }
                let w = match weighting {
                    Weighting::Binary => 1.0,
                    Weighting::InverseSquaredDistance => {
                        let d2 = (positions[i] - positions[j]).norm_squared();
                        if d2 == 0.0 {
                            return Err(Error::CoincidentVertices(i.min(j), i.max(j)));
                        }
                        1.0 / d2
                    }
                };
                row.push((j, -w));
            }
            row.sort_unstable_by_key(|&(j, _)| j);
            rows.push(row);
        }
        let diag = rows.iter().map(|r| r.len() as f64).collect();
        Ok(Laplacian {
            diag,
            rows,
            weighting,
        })
    }
}

/// Graph Laplacian of a block, using the block's local numbering.
///
/// Coincident connected vertices are reported with their global ids.
pub fn build_laplacian(
    submesh: &Submesh,
    vertices: &[Point3<f64>],
    weighting: Weighting,
) -> Result<Laplacian> {
    let local = submesh.gather(vertices);
    Laplacian::from_adjacency(&submesh.local_neighbors, &local, weighting).map_err(|e| match e {
        Error::CoincidentVertices(a, b) => {
            Error::CoincidentVertices(submesh.global_indices[a], submesh.global_indices[b])
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn edge(len: f64, w: Weighting) -> Laplacian {
        Laplacian::from_adjacency(
            &[vec![1], vec![0]],
            &[Point3::origin(), Point3::new(len, 0.0, 0.0)],
            w,
        )
        .unwrap()
    }

    #[test]
    fn unit_edge() {
        let l = edge(1.0, Weighting::InverseSquaredDistance).to_dense();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn length_two_edge() {
        let l = edge(2.0, Weighting::InverseSquaredDistance).to_dense();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -0.25, -0.25, 1.0]));
        let b = edge(2.0, Weighting::Binary).to_dense();
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn unit_triangle_row_sums() {
        let h = 3f64.sqrt() / 2.0;
        let l = Laplacian::from_adjacency(
            &[vec![1, 2], vec![0, 2], vec![0, 1]],
            &[
                Point3::origin(),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.5, h, 0.0),
            ],
            Weighting::InverseSquaredDistance,
        )
        .unwrap();
        let d = l.to_dense();
        for i in 0..3 {
            // D_ii = |N(i)| = 2, two unit-length edges of weight 1.
            assert_relative_eq!(d.row(i).sum(), 0.0, epsilon = 1e-12);
            assert_eq!(d[(i, i)], 2.0);
        }
        assert_eq!(d.transpose(), d);
    }

    #[test]
    fn coincident_vertices_rejected() {
        let r = Laplacian::from_adjacency(
            &[vec![1], vec![0]],
            &[Point3::origin(), Point3::origin()],
            Weighting::InverseSquaredDistance,
        );
        assert!(matches!(r, Err(Error::CoincidentVertices(0, 1))));
        // Binary weights never look at positions.
        assert!(Laplacian::from_adjacency(
            &[vec![1], vec![0]],
            &[Point3::origin(); 2],
            Weighting::Binary
        )
        .is_ok());
    }

    #[test]
    fn too_small() {
        assert!(
            Laplacian::from_adjacency(&[vec![]], &[Point3::origin()], Weighting::Binary).is_err()
        );
    }
}
