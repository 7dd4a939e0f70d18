//! Binary basis dump: `GSPB`, u32 version, u64 n_d, u64 c, then n_d·c
//! row-major f64 values, all little-endian.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::SpectralBasis;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GSPB";
const VERSION: u32 = 1;

pub fn write_basis<W: Write>(mut w: W, basis: &SpectralBasis) -> std::io::Result<()> {
    let u = basis.matrix();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(u.nrows() as u64).to_le_bytes())?;
    w.write_all(&(u.ncols() as u64).to_le_bytes())?;
    for i in 0..u.nrows() {
        for j in 0..u.ncols() {
            w.write_all(&u[(i, j)].to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn read_basis<R: Read>(mut r: R) -> Result<SpectralBasis> {
    let io = |e: std::io::Error| Error::Format(format!("truncated basis dump: {e}"));
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a basis dump (bad magic)".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(io)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported basis dump version {version}"
        )));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8).map_err(io)?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8).map_err(io)?;
    let c = u64::from_le_bytes(b8) as usize;
    let mut values = Vec::with_capacity(n.saturating_mul(c).min(1 << 26));
    for _ in 0..n * c {
        r.read_exact(&mut b8).map_err(io)?;
        values.push(f64::from_le_bytes(b8));
    }
    SpectralBasis::new(DMatrix::from_row_slice(n, c, &values))
}
