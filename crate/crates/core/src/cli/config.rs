//! Run configuration: defaults, `key = value` files and flag overrides.
//!
//! Every key below is accepted in a config file (one `key = value` per line,
//! `#` starts a comment) and as a `--key value` flag. Later sources win:
//! defaults, then the file, then flags. Dashes and underscores in keys are
//! interchangeable.

use std::fmt::Write as _;
use std::path::Path;

use crate::compress::CodecConfig;
use crate::denoise::{BilateralParams, DenoiseConfig};
use crate::error::{Error, Result};
use crate::metrics::{CoherenceConfig, COHERENCE_SIZE};
use crate::pipeline::{BasisMode, DoiBand, LayoutConfig, Stitching, SubspaceSize, TrackingConfig};
use crate::spectral::{Weighting, DEFAULT_DENSE_LIMIT, DEFAULT_RELATIVE_SHIFT};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub growth: f64,
    pub stitching: Stitching,
    pub c: SubspaceSize,
    pub q_c: u32,
    pub z: u32,
    pub t_max: usize,
    pub mode: BasisMode,
    pub weighting: Weighting,
    pub delta_rel: f64,
    pub dense_limit: usize,
    pub eps_l: f64,
    pub eps_h: f64,
    pub c_min: Option<usize>,
    pub c_max: Option<usize>,
    pub doi_t_max: usize,
    pub sigma_s: Option<f64>,
    pub sigma_r: f64,
    pub normal_iterations: usize,
    pub vertex_iterations: usize,
    pub neighborhood: usize,
    /// Run the bilateral stage after the spectral low-pass when denoising.
    pub fine: bool,
    /// Gaussian noise (times mean edge length) added to denoise inputs.
    pub noise: f64,
    pub seed: u64,
    pub sweep_k: Vec<usize>,
    pub sweep_growth: Vec<f64>,
    pub sweep_c: Vec<SubspaceSize>,
    pub sweep_z: Vec<u32>,
    pub sweep_t_max: Vec<usize>,
    /// Add a dense-basis reference row per bench cell.
    pub bench_svd: bool,
    pub coherence_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let layout = LayoutConfig::default();
        let tracking = TrackingConfig::default();
        let doi = DoiBand::default();
        let bilateral = BilateralParams::default();
        RunConfig {
            k: layout.k,
            growth: layout.growth,
            stitching: layout.stitching,
            c: tracking.c,
            q_c: CodecConfig::default().q_c,
            z: tracking.z,
            t_max: tracking.t_max,
            mode: tracking.mode,
            weighting: tracking.weighting,
            delta_rel: DEFAULT_RELATIVE_SHIFT,
            dense_limit: DEFAULT_DENSE_LIMIT,
            eps_l: doi.eps_l,
            eps_h: doi.eps_h,
            c_min: doi.c_min,
            c_max: doi.c_max,
            doi_t_max: doi.t_max,
            sigma_s: bilateral.sigma_s,
            sigma_r: bilateral.sigma_r,
            normal_iterations: bilateral.normal_iterations,
            vertex_iterations: bilateral.vertex_iterations,
            neighborhood: bilateral.neighborhood,
            fine: true,
            noise: 0.0,
            seed: 0,
            sweep_k: vec![layout.k],
            sweep_growth: vec![layout.growth],
            sweep_c: vec![tracking.c],
            sweep_z: vec![tracking.z],
            sweep_t_max: vec![tracking.t_max],
            bench_svd: true,
            coherence_size: COHERENCE_SIZE,
        }
    }
}

/// All recognised keys, in echo order.
pub const KEYS: &[&str] = &[
    "k",
    "growth",
    "stitching",
    "c",
    "q-c",
    "z",
    "t-max",
    "mode",
    "weighting",
    "delta-rel",
    "dense-limit",
    "eps-l",
    "eps-h",
    "c-min",
    "c-max",
    "doi-t-max",
    "sigma-s",
    "sigma-r",
    "normal-iterations",
    "vertex-iterations",
    "neighborhood",
    "fine",
    "noise",
    "seed",
    "sweep-k",
    "sweep-growth",
    "sweep-c",
    "sweep-z",
    "sweep-t-max",
    "bench-svd",
    "coherence-size",
];

fn invalid(key: &str, value: &str) -> Error {
    Error::InvalidArgument(format!("bad value {value:?} for {key}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| invalid(key, value))
}

fn opt_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "" | "auto" | "none" => Ok(None),
        v => num(key, v).map(Some),
    }
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(invalid(key, value)),
    }
}

fn list<T>(value: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn size_str(s: SubspaceSize) -> String {
    match s {
        SubspaceSize::Count(c) => c.to_string(),
        SubspaceSize::Fraction(f) => format!("{}%", f * 100.0),
    }
}

fn opt_str<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "auto".into())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let k = key.as_str();
        let v = value.trim();
        match k {
            "k" => self.k = num(k, v)?,
            "growth" => self.growth = num(k, v)?,
            "stitching" => self.stitching = v.parse()?,
            "c" => self.c = v.parse()?,
            "q-c" | "qc" => self.q_c = num(k, v)?,
            "z" => self.z = num(k, v)?,
            "t-max" => self.t_max = num(k, v)?,
            "mode" => self.mode = v.parse()?,
            "weighting" => self.weighting = v.parse()?,
            "delta-rel" => self.delta_rel = num(k, v)?,
            "dense-limit" => self.dense_limit = num(k, v)?,
            "eps-l" => self.eps_l = num(k, v)?,
            "eps-h" => self.eps_h = num(k, v)?,
            "c-min" => self.c_min = opt_num(k, v)?,
            "c-max" => self.c_max = opt_num(k, v)?,
            "doi-t-max" => self.doi_t_max = num(k, v)?,
            "sigma-s" => self.sigma_s = opt_num(k, v)?,
            "sigma-r" => self.sigma_r = num(k, v)?,
            "normal-iterations" => self.normal_iterations = num(k, v)?,
            "vertex-iterations" => self.vertex_iterations = num(k, v)?,
            "neighborhood" => self.neighborhood = num(k, v)?,
            "fine" => self.fine = flag(k, v)?,
            "noise" => self.noise = num(k, v)?,
            "seed" => self.seed = num(k, v)?,
            "sweep-k" => self.sweep_k = list(v, |s| num(k, s))?,
            "sweep-growth" => self.sweep_growth = list(v, |s| num(k, s))?,
            "sweep-c" => self.sweep_c = list(v, |s| s.parse())?,
            "sweep-z" => self.sweep_z = list(v, |s| num(k, s))?,
            "sweep-t-max" => self.sweep_t_max = list(v, |s| num(k, s))?,
            "bench-svd" => self.bench_svd = flag(k, v)?,
            "coherence-size" => self.coherence_size = num(k, v)?,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key {key:?}"
                )))
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "k" => self.k.to_string(),
            "growth" => self.growth.to_string(),
            "stitching" => self.stitching.to_string(),
            "c" => size_str(self.c),
            "q-c" => self.q_c.to_string(),
            "z" => self.z.to_string(),
            "t-max" => self.t_max.to_string(),
            "mode" => self.mode.to_string(),
            "weighting" => self.weighting.to_string(),
            "delta-rel" => self.delta_rel.to_string(),
            "dense-limit" => self.dense_limit.to_string(),
            "eps-l" => self.eps_l.to_string(),
            "eps-h" => self.eps_h.to_string(),
            "c-min" => opt_str(self.c_min),
            "c-max" => opt_str(self.c_max),
            "doi-t-max" => self.doi_t_max.to_string(),
            "sigma-s" => opt_str(self.sigma_s),
            "sigma-r" => self.sigma_r.to_string(),
            "normal-iterations" => self.normal_iterations.to_string(),
            "vertex-iterations" => self.vertex_iterations.to_string(),
            "neighborhood" => self.neighborhood.to_string(),
            "fine" => self.fine.to_string(),
            "noise" => self.noise.to_string(),
            "seed" => self.seed.to_string(),
            "sweep-k" => join(&self.sweep_k),
            "sweep-growth" => join(&self.sweep_growth),
            "sweep-c" => self
                .sweep_c
                .iter()
                .map(|&s| size_str(s))
                .collect::<Vec<_>>()
                .join(","),
            "sweep-z" => join(&self.sweep_z),
            "sweep-t-max" => join(&self.sweep_t_max),
            "bench-svd" => self.bench_svd.to_string(),
            "coherence-size" => self.coherence_size.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    /// Every key with its effective value, readable back by [`apply_text`](Self::apply_text).
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    pub fn layout(&self) -> LayoutConfig {
        LayoutConfig {
            k: self.k,
            growth: self.growth,
            stitching: self.stitching,
            seed: self.seed,
        }
    }

    pub fn tracking(&self) -> TrackingConfig {
        TrackingConfig {
            mode: self.mode,
            c: self.c,
            z: self.z,
            t_max: self.t_max,
            weighting: self.weighting,
            delta_rel: self.delta_rel,
            dense_limit: self.dense_limit,
            initial_t_max: TrackingConfig::default().initial_t_max,
            doi: DoiBand {
                eps_l: self.eps_l,
                eps_h: self.eps_h,
                c_min: self.c_min,
                c_max: self.c_max,
                t_max: self.doi_t_max,
            },
            seed: self.seed,
        }
    }

    pub fn codec(&self) -> CodecConfig {
        CodecConfig {
            layout: self.layout(),
            tracking: self.tracking(),
            q_c: self.q_c,
        }
    }

    pub fn denoise(&self) -> DenoiseConfig {
        DenoiseConfig {
            layout: self.layout(),
            tracking: self.tracking(),
        }
    }

    pub fn bilateral(&self) -> BilateralParams {
        BilateralParams {
            sigma_s: self.sigma_s,
            sigma_r: self.sigma_r,
            normal_iterations: self.normal_iterations,
            vertex_iterations: self.vertex_iterations,
            neighborhood: self.neighborhood,
        }
    }

    pub fn coherence(&self) -> CoherenceConfig {
        CoherenceConfig {
            k: self.k,
            growth: self.growth,
            weighting: self.weighting,
            delta_rel: self.delta_rel,
            size: self.coherence_size,
            seed: self.seed,
        }
    }

    /// Checks the settings every command shares.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.growth >= 1.0) || !self.growth.is_finite() {
            return bad(format!("growth must be >= 1, got {}", self.growth));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return bad(format!("noise must be >= 0, got {}", self.noise));
        }
        if self.sweep_k.contains(&0) {
            return bad("sweep-k entries must be at least 1".into());
        }
        if self.sweep_growth.iter().any(|g| !(*g >= 1.0)) {
            return bad("sweep-growth entries must be >= 1".into());
        }
        if self.coherence_size == 0 {
            return bad("coherence-size must be positive".into());
        }
        self.tracking().validate()?;
        self.bilateral().validate()
    }
}
