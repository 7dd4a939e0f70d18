//! Thin orthonormalization by Householder reflections.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Columns whose `|r_kk|` falls below this fraction of `||block||_F` are
/// treated as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-13;

/// Flips each column so that its largest-magnitude entry (first on ties) is positive.
pub fn apply_sign_convention(m: &mut DMatrix<f64>) {
    let rows = m.nrows();
    for mut col in m.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for i in 0..rows {
            let a = col[i].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if rows > 0 && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Returns the first `c` columns of `Q` from `block = QR`, computed with `c`
/// sequential Householder reflections, then normalised by
/// [`apply_sign_convention`]. The column span of `block` is preserved.
pub fn orthonormalize(block: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, c) = block.shape();
    if c > n {
        return Err(Error::Dimension(format!(
            "cannot orthonormalize {c} columns in dimension {n}"
        )));
    }
    let scale = block.norm();
    if c == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let mut a = block.clone();
    // Unit reflector vectors, column k holds v_k in rows k..n.
    let mut v = DMatrix::<f64>::zeros(n, c);
    {
        let ad = a.as_mut_slice();
        let vd = v.as_mut_slice();
        for k in 0..c {
            let col = &ad[k * n + k..(k + 1) * n];
            let xnorm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(xnorm >= RANK_TOLERANCE * scale) || xnorm == 0.0 {
                return Err(Error::RankDeficient {
                    column: k,
                    value: xnorm,
                });
            }
            let alpha = if col[0] >= 0.0 { -xnorm } else { xnorm };
            let vk = &mut vd[k * n + k..(k + 1) * n];
            vk.copy_from_slice(col);
            vk[0] -= alpha;
            let vnorm = vk.iter().map(|x| x * x).sum::<f64>().sqrt();
            if vnorm > 0.0 {
                vk.iter_mut().for_each(|x| *x /= vnorm);
            }
            // R entry for this column is alpha; the column itself is no longer needed.
            for j in k + 1..c {
                let (head, tail) = ad.split_at_mut(j * n);
                let _ = head;
                let aj = &mut tail[k..n];
                let dot: f64 = aj.iter().zip(vk.iter()).map(|(x, y)| x * y).sum();
                let f = 2.0 * dot;
                aj.iter_mut().zip(vk.iter()).for_each(|(x, y)| *x -= f * y);
            }
        }
    }
    // Q[:, :c] = H_1 H_2 ... H_c [I; 0].
    let mut q = DMatrix::<f64>::zeros(n, c);
    {
        let qd = q.as_mut_slice();
        for j in 0..c {
            qd[j * n + j] = 1.0;
        }
        let vd = v.as_slice();
        for k in (0..c).rev() {
            let vk = &vd[k * n + k..(k + 1) * n];
            for j in k..c {
                let qj = &mut qd[j * n + k..(j + 1) * n];
                let dot: f64 = qj.iter().zip(vk).map(|(x, y)| x * y).sum();
                let f = 2.0 * dot;
                qj.iter_mut().zip(vk).for_each(|(x, y)| *x -= f * y);
            }
        }
    }
    apply_sign_convention(&mut q);
    Ok(q)
}
