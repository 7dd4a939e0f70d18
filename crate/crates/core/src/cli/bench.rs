//! Parameter sweeps for timing and quality tables, and the coherence matrix.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::compress::{compress_mesh, decompress_mesh, CodecConfig};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::metrics::{mesh_mnd, mesh_theta, nmsve};
use crate::pipeline::{BasisMode, SubspaceSize};

use super::config::RunConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub model: String,
    pub mode: BasisMode,
    pub k: usize,
    pub growth: f64,
    pub c: SubspaceSize,
    pub z: u32,
    pub t_max: usize,
    pub basis_seconds: f64,
    pub encode_seconds: f64,
    pub bpv: f64,
    pub nmsve_db: f64,
    pub theta_deg: f64,
    pub mnd: f64,
    /// Dense-basis time over this row's basis time, when a dense row ran.
    pub speedup: Option<f64>,
}

pub const BENCH_HEADER: [&str; 14] = [
    "model",
    "mode",
    "k",
    "growth",
    "c",
    "z",
    "t_max",
    "basis_seconds",
    "encode_seconds",
    "bpv",
    "nmsve_db",
    "theta_deg",
    "mnd",
    "speedup",
];

impl BenchRow {
    fn record(&self) -> Vec<String> {
        let c = match self.c {
            SubspaceSize::Count(c) => c.to_string(),
            SubspaceSize::Fraction(f) => format!("{}%", f * 100.0),
        };
        vec![
            self.model.clone(),
            self.mode.to_string(),
            self.k.to_string(),
            self.growth.to_string(),
            c,
            self.z.to_string(),
            self.t_max.to_string(),
            self.basis_seconds.to_string(),
            self.encode_seconds.to_string(),
            self.bpv.to_string(),
            self.nmsve_db.to_string(),
            self.theta_deg.to_string(),
            self.mnd.to_string(),
            self.speedup.map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

fn run_cell(model: &str, mesh: &Mesh, cfg: &CodecConfig) -> Result<BenchRow> {
    let out = compress_mesh(mesh, cfg)?;
    let decoded = decompress_mesh(&out.encoded)?;
    Ok(BenchRow {
        model: model.to_string(),
        mode: cfg.tracking.mode,
        k: cfg.layout.k,
        growth: cfg.layout.growth,
        c: cfg.tracking.c,
        z: cfg.tracking.z,
        t_max: cfg.tracking.t_max,
        basis_seconds: out.basis_seconds,
        encode_seconds: out.encode_seconds,
        bpv: out.encoded.bits_per_vertex(),
        nmsve_db: nmsve(mesh, &decoded)?,
        theta_deg: mesh_theta(mesh, &decoded)?,
        mnd: mesh_mnd(mesh, &decoded)?,
        speedup: None,
    })
}

/// One row per cell of `sweep_k × sweep_growth × sweep_c × sweep_z ×
/// sweep_t_max` in the configured mode, preceded by a dense row per
/// `(k, growth, c)` when `bench_svd` is set. Any empty sweep list gives no rows.
pub fn bench(model: &str, mesh: &Mesh, run: &RunConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    let base = run.codec();
    for &k in &run.sweep_k {
        for &growth in &run.sweep_growth {
            for &c in &run.sweep_c {
                if run.sweep_z.is_empty() || run.sweep_t_max.is_empty() {
                    continue;
                }
                let mut cfg = base;
                cfg.layout.k = k;
                cfg.layout.growth = growth;
                cfg.tracking.c = c;
                let dense = if run.bench_svd {
                    let mut d = cfg;
                    d.tracking.mode = BasisMode::Svd;
                    let row = run_cell(model, mesh, &d)?;
                    let t = row.basis_seconds;
                    rows.push(row);
                    Some(t)
                } else {
                    None
                };
                for &z in &run.sweep_z {
                    for &t_max in &run.sweep_t_max {
                        cfg.tracking.z = z;
                        cfg.tracking.t_max = t_max;
                        let mut row = run_cell(model, mesh, &cfg)?;
                        row.speedup = dense.map(|d| d / row.basis_seconds.max(1e-12));
                        rows.push(row);
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.rd.dat` (bpv, NMSVE) and `<stem>.z.dat` (z, θ) series next
/// to `csv_path`, whitespace separated with a `#` header, grouped by mode.
pub fn write_plot_data(rows: &[BenchRow], csv_path: &Path) -> Result<()> {
    let stem = csv_path.with_extension("");
    let series =
        |suffix: &str, head: &str, pick: &dyn Fn(&BenchRow) -> (String, f64)| -> Result<()> {
            let path = stem.with_extension(suffix);
            let mut f = create(&path)?;
            let mut text = format!("# mode {head}\n");
            for r in rows {
                let (x, y) = pick(r);
                text.push_str(&format!("{} {x} {y}\n", r.mode));
            }
            f.write_all(text.as_bytes())
                .map_err(|e| Error::io(&path, e))
        };
    series("rd.dat", "bpv nmsve_db", &|r| {
        (r.bpv.to_string(), r.nmsve_db)
    })?;
    series("z.dat", "z theta_deg", &|r| {
        let z = if r.mode == BasisMode::Svd {
            "inf".to_string()
        } else {
            r.z.to_string()
        };
        (z, r.theta_deg)
    })
}

/// Square MSE matrix as CSV: header `model,<names…>`, one row per model.
pub fn write_coherence_csv<W: Write>(names: &[String], matrix: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["model".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (name, row) in names.iter().zip(matrix) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn empty_sweep_is_header_only() {
        let run = RunConfig {
            sweep_z: vec![],
            ..Default::default()
        };
        let rows = bench("torus", &shapes::torus(20, 10, 2.0, 0.7), &run).unwrap();
        assert!(rows.is_empty());
        let mut buf = Vec::new();
        write_bench_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn sweep_rows_carry_speedup() {
        let run = RunConfig {
            sweep_k: vec![2],
            sweep_c: vec![SubspaceSize::Fraction(0.2)],
            sweep_z: vec![1, 2],
            sweep_t_max: vec![1],
            ..Default::default()
        };
        let rows = bench("torus", &shapes::torus(24, 12, 2.0, 0.7), &run).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].mode, BasisMode::Svd);
        assert!(rows[0].speedup.is_none());
        assert!(rows[1..]
            .iter()
            .all(|r| r.speedup.is_some() && r.mode == BasisMode::Oi));
        assert_eq!((rows[1].z, rows[2].z), (1, 2));
    }
}
