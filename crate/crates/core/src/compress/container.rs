//! Bitstream container, version 1. All integers and floats little-endian.
//!
//! ```text
//! "GSPC"  u32 version
//! config  u8 q_c, u8 mode (0 oi, 1 doi, 2 svd), u8 stitching (0 none, 1 simple, 2 weighted),
//!         u32 z, u32 t_max, u32 initial_t_max, f64 delta_rel, u64 dense_limit, u64 seed,
//!         u64 k, f64 growth, u8 c kind (0 count, 1 fraction), f64 c value,
//!         f64 eps_l, f64 eps_h, u64 c_min (0 = unset), u64 c_max (0 = unset), u32 doi t_max
//! mesh    u64 n, u64 face count, 3×u32 per face
//! layout  n×u32 part id, u64 n_d, k×u32 block order
//! blocks  k times, in processing order:
//!         u32 submesh, u32 c, u8 degenerate-axis flags, 3×(f64 min, f64 max),
//!         packed q_c-bit values, axis-major, skipping degenerate axes, byte aligned
//! ```

use std::path::Path;

use super::bits::{BitReader, BitWriter};
use super::{check_bits, AxisQuantizer, CodecConfig, EncodedBlock};
use crate::error::{Error, Result};
use crate::pipeline::{BasisMode, DoiBand, LayoutConfig, Stitching, SubspaceSize, TrackingConfig};
use crate::spectral::Weighting;

pub const MAGIC: &[u8; 4] = b"GSPC";
pub const FORMAT_VERSION: u32 = 1;

/// Everything the decoder needs: config echo, connectivity, layout and coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMesh {
    pub config: CodecConfig,
    pub vertex_count: usize,
    pub faces: Vec<[usize; 3]>,
    pub assignment: Vec<usize>,
    pub k: usize,
    pub n_d: usize,
    pub order: Vec<usize>,
    /// In processing order.
    pub blocks: Vec<EncodedBlock>,
}

impl EncodedMesh {
    /// Rate of the coefficient payload, `3·q_c·Σc_i / n`.
    pub fn bits_per_vertex(&self) -> f64 {
        let total: usize = self.blocks.iter().map(|b| b.c).sum();
        3.0 * self.config.q_c as f64 * total as f64 / self.vertex_count as f64
    }

    pub fn total_coefficients(&self) -> usize {
        self.blocks.iter().map(|b| 3 * b.c).sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        let cfg = &self.config;
        let t = &cfg.tracking;
        w.bytes.extend_from_slice(MAGIC);
        w.u32(FORMAT_VERSION);
        w.u8(cfg.q_c as u8);
        w.u8(match t.mode {
            BasisMode::Oi => 0,
            BasisMode::Doi => 1,
            BasisMode::Svd => 2,
        });
        w.u8(match cfg.layout.stitching {
            Stitching::NonOverlapping => 0,
            Stitching::Simple => 1,
            Stitching::Weighted => 2,
        });
        w.u32(t.z);
        w.u32(t.t_max as u32);
        w.u32(t.initial_t_max as u32);
        w.f64(t.delta_rel);
        w.u64(t.dense_limit as u64);
        w.u64(t.seed);
        w.u64(cfg.layout.k as u64);
        w.f64(cfg.layout.growth);
        match t.c {
            SubspaceSize::Count(c) => {
                w.u8(0);
                w.f64(c as f64);
            }
            SubspaceSize::Fraction(f) => {
                w.u8(1);
                w.f64(f);
            }
        }
        w.f64(t.doi.eps_l);
        w.f64(t.doi.eps_h);
        w.u64(t.doi.c_min.unwrap_or(0) as u64);
        w.u64(t.doi.c_max.unwrap_or(0) as u64);
        w.u32(t.doi.t_max as u32);

        w.u64(self.vertex_count as u64);
        w.u64(self.faces.len() as u64);
        for f in &self.faces {
            for &v in f {
                w.u32(v as u32);
            }
        }
        for &p in &self.assignment {
            w.u32(p as u32);
        }
        w.u64(self.n_d as u64);
        for &b in &self.order {
            w.u32(b as u32);
        }
        for b in &self.blocks {
            w.u32(b.submesh as u32);
            w.u32(b.c as u32);
            let flags = (0..3).fold(0u8, |acc, a| {
                acc | ((b.quantizers[a].is_degenerate() as u8) << a)
            });
            w.u8(flags);
            for q in &b.quantizers {
                w.f64(q.min);
                w.f64(q.max);
            }
            let mut bw = BitWriter::new();
            for (a, q) in b.quantizers.iter().enumerate() {
                if !q.is_degenerate() {
                    for &v in &b.values[a * b.c..(a + 1) * b.c] {
                        bw.write(v, cfg.q_c);
                    }
                }
            }
            w.bytes.extend_from_slice(&bw.finish());
        }
        w.bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a compressed mesh (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported stream version {version}"
            )));
        }
        let q_c = r.u8()? as u32;
        check_bits(q_c).map_err(|e| Error::Format(e.to_string()))?;
        let mode = match r.u8()? {
            0 => BasisMode::Oi,
            1 => BasisMode::Doi,
            2 => BasisMode::Svd,
            m => return Err(Error::Format(format!("unknown basis mode tag {m}"))),
        };
        let stitching = match r.u8()? {
            0 => Stitching::NonOverlapping,
            1 => Stitching::Simple,
            2 => Stitching::Weighted,
            s => return Err(Error::Format(format!("unknown stitching tag {s}"))),
        };
        let z = r.u32()?;
        let t_max = r.u32()? as usize;
        let initial_t_max = r.u32()? as usize;
        let delta_rel = r.f64()?;
        let dense_limit = r.u64()? as usize;
        let seed = r.u64()?;
        let k_cfg = r.u64()? as usize;
        let growth = r.f64()?;
        let c = match r.u8()? {
            0 => SubspaceSize::Count(r.f64()? as usize),
            1 => SubspaceSize::Fraction(r.f64()?),
            t => return Err(Error::Format(format!("unknown subspace size tag {t}"))),
        };
        let eps_l = r.f64()?;
        let eps_h = r.f64()?;
        let opt = |v: u64| if v == 0 { None } else { Some(v as usize) };
        let c_min = opt(r.u64()?);
        let c_max = opt(r.u64()?);
        let doi_t_max = r.u32()? as usize;
        let config = CodecConfig {
            layout: LayoutConfig {
                k: k_cfg,
                growth,
                stitching,
                seed,
            },
            tracking: TrackingConfig {
                mode,
                c,
                z,
                t_max,
                weighting: Weighting::Binary,
                delta_rel,
                dense_limit,
                initial_t_max,
                doi: DoiBand {
                    eps_l,
                    eps_h,
                    c_min,
                    c_max,
                    t_max: doi_t_max,
                },
                seed,
            },
            q_c,
        };

        let n = r.u64()? as usize;
        let nf = r.u64()? as usize;
        r.ensure(nf.saturating_mul(12))?;
        let mut faces = Vec::with_capacity(nf);
        for _ in 0..nf {
            faces.push([r.u32()? as usize, r.u32()? as usize, r.u32()? as usize]);
        }
        r.ensure(n.saturating_mul(4))?;
        let assignment = (0..n)
            .map(|_| r.u32().map(|p| p as usize))
            .collect::<Result<Vec<_>>>()?;
        let k = assignment.iter().max().map_or(0, |&m| m + 1);
        let n_d = r.u64()? as usize;
        let order = (0..k)
            .map(|_| r.u32().map(|b| b as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut blocks = Vec::with_capacity(k);
        for _ in 0..k {
            let submesh = r.u32()? as usize;
            let c = r.u32()? as usize;
            let flags = r.u8()?;
            let mut quantizers = [AxisQuantizer {
                min: 0.0,
                max: 0.0,
                bits: q_c,
            }; 3];
            for q in &mut quantizers {
                q.min = r.f64()?;
                q.max = r.f64()?;
                if !(q.min <= q.max) {
                    return Err(Error::Format(format!(
                        "block {submesh}: quantizer range is inverted"
                    )));
                }
            }
            for (a, q) in quantizers.iter().enumerate() {
                if (flags >> a) & 1 != q.is_degenerate() as u8 {
                    return Err(Error::Format(format!(
                        "block {submesh}: degenerate flags disagree with ranges"
                    )));
                }
            }
            let live = quantizers.iter().filter(|q| !q.is_degenerate()).count();
            let payload = r.take(super::bits::packed_len(live * c, q_c))?;
            let mut br = BitReader::new(payload);
            let mut values = Vec::with_capacity(3 * c);
            for q in &quantizers {
                for _ in 0..c {
                    values.push(if q.is_degenerate() { 0 } else { br.read(q_c)? });
                }
            }
            blocks.push(EncodedBlock {
                submesh,
                c,
                quantizers,
                values,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(EncodedMesh {
            config,
            vertex_count: n,
            faces,
            assignment,
            k,
            n_d,
            order,
            blocks,
        })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[derive(Default)]
struct ByteWriter {
    bytes: Vec<u8>,
}

impl ByteWriter {
    fn u8(&mut self, v: u8) {
        self.bytes.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn ensure(&self, len: usize) -> Result<()> {
        if self.bytes.len() - self.pos < len {
            return Err(Error::Format(format!(
                "stream truncated at byte {}",
                self.pos
            )));
        }
        Ok(())
    }
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        self.ensure(len)?;
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::{compress_mesh, CodecConfig};
    use crate::mesh::shapes;

    #[test]
    fn header_layout() {
        let out = compress_mesh(
            &shapes::tetrahedron(),
            &CodecConfig {
                tracking: TrackingConfig {
                    c: SubspaceSize::Count(2),
                    ..Default::default()
                },
                ..Default::default()
            },
        )
        .unwrap();
        let bytes = out.encoded.to_bytes();
        assert_eq!(&bytes[..4], b"GSPC");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(bytes[8], 12);
    }

    #[test]
    fn corrupt_streams_rejected() {
        let out = compress_mesh(&shapes::icosphere(1), &CodecConfig::default()).unwrap();
        let bytes = out.encoded.to_bytes();
        assert!(EncodedMesh::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(EncodedMesh::from_bytes(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(EncodedMesh::from_bytes(&magic).is_err());
        let mut version = bytes;
        version[4] = 9;
        assert!(EncodedMesh::from_bytes(&version).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.gspc");
        let out = compress_mesh(&shapes::icosphere(1), &CodecConfig::default()).unwrap();
        out.encoded.write_file(&path).unwrap();
        assert_eq!(EncodedMesh::read_file(&path).unwrap(), out.encoded);
    }
}
