//! Envelope (skyline) Cholesky factorization for banded SPD systems.
//!
//! Blocks are numbered by reverse Cuthill–McKee, so the row envelopes stay
//! narrow and a profile factorization is both simple and fast.

use crate::error::{Error, Result};
use crate::spectral::Laplacian;

/// `A = G Gᵀ` with `G` lower triangular, stored row by row over each row's envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors `L + shift·I`.
    pub fn factor(lap: &Laplacian, shift: f64) -> Result<Self> {
        let n = lap.size();
        let mut first = Vec::with_capacity(n);
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for i in 0..n {
            let f = lap
                .row(i)
                .iter()
                .map(|&(j, _)| j)
                .filter(|&j| j < i)
                .min()
                .unwrap_or(i);
            first.push(f);
            start.push(total);
            total += i - f + 1;
        }
        start.push(total);
        let mut data = vec![0.0; total];
        for i in 0..n {
            let (f, s) = (first[i], start[i]);
            data[s + i - f] = lap.diagonal()[i] + shift;
            for &(j, v) in lap.row(i) {
                if j < i {
                    data[s + j - f] = v;
                }
            }
        }
        for i in 0..n {
            let (fi, si) = (first[i], start[i]);
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let sj = start[j];
                let mut acc = data[si + j - fi];
                let ri = &data[si + k0 - fi..si + j - fi];
                let rj = &data[sj + k0 - fj..sj + j - fj];
                acc -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                if j < i {
                    data[si + j - fi] = acc / data[sj + j - fj];
                } else {
                    if !(acc > 0.0) {
                        return Err(Error::NotPositiveDefinite {
                            pivot: i,
                            value: acc,
                        });
                    }
                    data[si + i - fi] = acc.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky { first, start, data })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.first.len()
    }

    /// Stored entries, a measure of fill.
    pub fn envelope_len(&self) -> usize {
        self.data.len()
    }

    /// Overwrites `x` with `A⁻¹ x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.size();
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let (f, s) = (self.first[i], self.start[i]);
            let row = &self.data[s..s + i - f];
            let dot: f64 = row.iter().zip(&x[f..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - dot) / self.data[s + i - f];
        }
        for i in (0..n).rev() {
            let (f, s) = (self.first[i], self.start[i]);
            let xi = x[i] / self.data[s + i - f];
            x[i] = xi;
            for (xk, g) in x[f..i].iter_mut().zip(&self.data[s..s + i - f]) {
                *xk -= g * xi;
            }
        }
    }
}
