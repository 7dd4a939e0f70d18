//! Command-line front end behind the `gsp` binary.
//!
//! Exit codes: 0 success, 2 invalid arguments or configuration, 3 failure
//! while running. Each command writes `<output>.config` (or `config.txt`
//! inside an output directory) holding the effective settings.

pub mod bench;
pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::compress::{compress_mesh, decompress_mesh, EncodedMesh};
use crate::denoise::{coarse_denoise, denoise_dynamic, fine_denoise};
use crate::error::{Error, Result};
use crate::mesh::{add_gaussian_noise, load_mesh, save_mesh, shapes, Mesh, MeshFormat};
use crate::metrics::{coherence_matrix, MetricsReport};

pub use config::RunConfig;

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "GSP_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "gsp",
    version,
    about = "Block-based spectral mesh compression and denoising"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// `key = value` file applied before flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for the parallel stages.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub params: Params,
}

macro_rules! params {
    ($($field:ident => $key:literal),* $(,)?) => {
        /// Overrides for [`RunConfig`]; see the config module for the meaning of each key.
        #[derive(Debug, Default, Args)]
        pub struct Params {
            $(
                #[arg(long = $key, global = true, value_name = "VALUE")]
                pub $field: Option<String>,
            )*
        }

        impl Params {
            pub fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push(($key, v.as_str()));
                    }
                )*
                out
            }
        }
    };
}

params! {
    k => "k",
    growth => "growth",
    stitching => "stitching",
    c => "c",
    q_c => "q-c",
    z => "z",
    t_max => "t-max",
    mode => "mode",
    weighting => "weighting",
    delta_rel => "delta-rel",
    dense_limit => "dense-limit",
    eps_l => "eps-l",
    eps_h => "eps-h",
    c_min => "c-min",
    c_max => "c-max",
    doi_t_max => "doi-t-max",
    sigma_s => "sigma-s",
    sigma_r => "sigma-r",
    normal_iterations => "normal-iterations",
    vertex_iterations => "vertex-iterations",
    neighborhood => "neighborhood",
    fine => "fine",
    noise => "noise",
    seed => "seed",
    sweep_k => "sweep-k",
    sweep_growth => "sweep-growth",
    sweep_c => "sweep-c",
    sweep_z => "sweep-z",
    sweep_t_max => "sweep-t-max",
    bench_svd => "bench-svd",
    coherence_size => "coherence-size",
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode a mesh into a bitstream.
    Compress {
        /// Mesh file (.obj/.off) or `synth:<shape>:<param>`.
        input: String,
        output: PathBuf,
        /// Decode again and write quality figures against the input.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Decode a bitstream into a mesh file.
    Decompress {
        input: PathBuf,
        output: PathBuf,
        /// Ground truth for the metrics CSV.
        #[arg(long)]
        reference: Option<String>,
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Spectral low-pass, then (unless `--fine false`) bilateral refinement.
    Denoise {
        input: String,
        output: PathBuf,
        /// Clean mesh for the metrics CSV; defaults to the input when `--noise` is set.
        #[arg(long)]
        reference: Option<String>,
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Denoise a directory of frames sharing one connectivity.
    DenoiseDynamic {
        /// Directory of numbered .obj/.off frames, processed in name order.
        input: PathBuf,
        output: PathBuf,
        /// Directory of clean frames with matching names.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Timing and quality sweep; CSV plus plot series.
    Bench { input: String, output: PathBuf },
    /// Operator coherence matrix across models.
    Coherence {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<String>,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid arguments: {m}"),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => CliError::Validation(m),
            other => CliError::Runtime(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn validation(e: Error) -> CliError {
    match e {
        Error::InvalidArgument(m) => CliError::Validation(m),
        other => CliError::Validation(other.to_string()),
    }
}

fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Validation(msg.into()))
}

/// `synth:<shape>[:<param>]` meshes for quick runs without files.
pub fn synth_mesh(spec: &str) -> Result<Mesh> {
    let mut parts = spec.split(':');
    let _ = parts.next();
    let shape = parts.next().unwrap_or("");
    let param = parts.next();
    let bad = || Error::InvalidArgument(format!("bad synthetic mesh {spec:?}"));
    let n = |default: usize| -> Result<usize> {
        match param.map_or(Ok(default), |p| p.parse().map_err(|_| bad()))? {
            0 => Err(bad()),
            v => Ok(v),
        }
    };
    let mesh = match shape {
        "tetrahedron" => shapes::tetrahedron(),
        "grid" => {
            let n = n(32)?;
            shapes::grid(n, n)
        }
        "sphere" => shapes::icosphere(n(4)? as u32),
        "torus" => {
            let n = n(64)?;
            shapes::torus(n, (n / 2).max(3), 3.0, 1.0)
        }
        "cube" => shapes::cube(n(16)?),
        "bumpy" => {
            let n = n(64)?;
            shapes::bumpy(&shapes::torus(n, (n / 2).max(3), 3.0, 1.0), 0.08, 5, 1)
        }
        _ => return Err(bad()),
    };
    Ok(mesh)
}

fn mesh_format(path: &Path) -> CliResult<MeshFormat> {
    MeshFormat::from_path(path).map_or_else(
        || invalid(format!("{} is not an .obj or .off path", path.display())),
        Ok,
    )
}

/// Loads a mesh file or builds a `synth:` mesh.
pub fn load_input(spec: &str) -> Result<Mesh> {
    if spec.starts_with("synth:") {
        return synth_mesh(spec);
    }
    let path = Path::new(spec);
    let format = MeshFormat::from_path(path)
        .ok_or_else(|| Error::InvalidArgument(format!("{spec} is not an .obj or .off path")))?;
    load_mesh(path, format)
}

fn check_input(spec: &str) -> CliResult<()> {
    if spec.starts_with("synth:") {
        synth_mesh(spec)?;
        return Ok(());
    }
    mesh_format(Path::new(spec)).map(|_| ())
}

fn label(spec: &str) -> String {
    if spec.starts_with("synth:") {
        return spec.trim_start_matches("synth:").replace(':', "-");
    }
    Path::new(spec)
        .file_stem()
        .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned())
}

fn echo_path(output: &Path) -> PathBuf {
    if output.is_dir() {
        output.join("config.txt")
    } else {
        let mut s = output.as_os_str().to_owned();
        s.push(".config");
        PathBuf::from(s)
    }
}

fn write_echo(run: &RunConfig, command: &str, input: &str, output: &Path) -> Result<()> {
    let path = echo_path(output);
    let text = format!("# command = {command}\n# input = {input}\n{}", run.echo());
    std::fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn save(mesh: &Mesh, path: &Path) -> CliResult<()> {
    Ok(save_mesh(mesh, path, mesh_format(path)?)?)
}

/// Builds the effective configuration: defaults, then `--config`, then flags.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut run = RunConfig::default();
    if let Some(path) = &cli.config {
        run.apply_file(path).map_err(validation)?;
    }
    for (key, value) in cli.params.pairs() {
        run.set(key, value).map_err(validation)?;
    }
    run.validate()?;
    Ok(run)
}

fn init_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return invalid("--threads must be at least 1");
        }
        // A pool may already exist when called twice in one process; keep it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    init_threads(cli.threads)?;
    let run = resolve_config(cli)?;
    match &cli.command {
        Command::Compress {
            input,
            output,
            metrics,
        } => cmd_compress(&run, input, output, metrics.as_deref()),
        Command::Decompress {
            input,
            output,
            reference,
            metrics,
        } => cmd_decompress(
            &run,
            input,
            output,
            reference.as_deref(),
            metrics.as_deref(),
        ),
        Command::Denoise {
            input,
            output,
            reference,
            metrics,
        } => cmd_denoise(
            &run,
            input,
            output,
            reference.as_deref(),
            metrics.as_deref(),
        ),
        Command::DenoiseDynamic {
            input,
            output,
            reference,
            metrics,
        } => cmd_denoise_dynamic(
            &run,
            input,
            output,
            reference.as_deref(),
            metrics.as_deref(),
        ),
        Command::Bench { input, output } => cmd_bench(&run, input, output),
        Command::Coherence { inputs, output } => cmd_coherence(&run, inputs, output),
    }
}

pub fn cmd_compress(
    run: &RunConfig,
    input: &str,
    output: &Path,
    metrics: Option<&Path>,
) -> CliResult<()> {
    check_input(input)?;
    let cfg = run.codec();
    cfg.validate()?;
    let mesh = load_input(input)?;
    let out = compress_mesh(&mesh, &cfg)?;
    out.encoded.write_file(output)?;
    write_echo(run, "compress", input, output)?;
    println!(
        "{}: {} vertices, {} blocks, {:.3} bpv, basis {:.3}s, encode {:.3}s",
        output.display(),
        mesh.vertex_count(),
        out.encoded.k,
        out.encoded.bits_per_vertex(),
        out.basis_seconds,
        out.encode_seconds
    );
    if let Some(path) = metrics {
        let decoded = decompress_mesh(&out.encoded)?;
        let mut report = MetricsReport::evaluate(label(input), &mesh, &decoded)?
            .with_timing("basis", out.basis_seconds)
            .with_timing("encode", out.encode_seconds);
        report.bpv = Some(out.encoded.bits_per_vertex());
        MetricsReport::save_csv(&[report], path)?;
    }
    Ok(())
}

pub fn cmd_decompress(
    run: &RunConfig,
    input: &Path,
    output: &Path,
    reference: Option<&str>,
    metrics: Option<&Path>,
) -> CliResult<()> {
    mesh_format(output)?;
    if let Some(r) = reference {
        check_input(r)?;
    }
    let enc = EncodedMesh::read_file(input)?;
    let start = Instant::now();
    let mesh = decompress_mesh(&enc)?;
    let seconds = start.elapsed().as_secs_f64();
    save(&mesh, output)?;
    write_echo(run, "decompress", &input.display().to_string(), output)?;
    println!(
        "{}: {} vertices in {seconds:.3}s",
        output.display(),
        mesh.vertex_count()
    );
    if let (Some(path), Some(r)) = (metrics, reference) {
        let truth = load_input(r)?;
        let mut report =
            MetricsReport::evaluate(label(r), &truth, &mesh)?.with_timing("decode", seconds);
        report.bpv = Some(enc.bits_per_vertex());
        MetricsReport::save_csv(&[report], path)?;
    }
    Ok(())
}

fn noisy_input(run: &RunConfig, spec: &str) -> Result<(Mesh, Option<Mesh>)> {
    let clean = load_input(spec)?;
    if run.noise > 0.0 {
        Ok((
            add_gaussian_noise(&clean, run.noise, run.seed)?,
            Some(clean),
        ))
    } else {
        Ok((clean, None))
    }
}

pub fn cmd_denoise(
    run: &RunConfig,
    input: &str,
    output: &Path,
    reference: Option<&str>,
    metrics: Option<&Path>,
) -> CliResult<()> {
    check_input(input)?;
    mesh_format(output)?;
    if let Some(r) = reference {
        check_input(r)?;
    }
    let (noisy, clean) = noisy_input(run, input)?;
    let start = Instant::now();
    let coarse = coarse_denoise(&noisy, &run.denoise())?;
    let coarse_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let fine = if run.fine {
        Some(fine_denoise(&coarse.mesh, &run.bilateral())?)
    } else {
        None
    };
    let fine_seconds = start.elapsed().as_secs_f64();
    let result = fine.as_ref().map_or(&coarse.mesh, |f| &f.mesh);
    save(result, output)?;
    write_echo(run, "denoise", input, output)?;
    println!(
        "{}: coarse {coarse_seconds:.3}s over {} blocks, fine {fine_seconds:.3}s",
        output.display(),
        coarse.layout.k()
    );
    if let Some(path) = metrics {
        let truth = match reference {
            Some(r) => load_input(r)?,
            None => clean.ok_or_else(|| {
                CliError::Validation("metrics need --reference or --noise".into())
            })?,
        };
        let mut rows = vec![
            MetricsReport::evaluate("noisy", &truth, &noisy)?,
            MetricsReport::evaluate("coarse", &truth, &coarse.mesh)?
                .with_timing("coarse", coarse_seconds),
        ];
        if let Some(f) = &fine {
            rows.push(
                MetricsReport::evaluate("fine", &truth, &f.mesh)?.with_timing("fine", fine_seconds),
            );
        }
        MetricsReport::save_csv(&rows, path)?;
    }
    Ok(())
}

fn frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| MeshFormat::from_path(p).is_some())
        .collect();
    files.sort();
    Ok(files)
}

pub fn cmd_denoise_dynamic(
    run: &RunConfig,
    input: &Path,
    output: &Path,
    reference: Option<&Path>,
    metrics: Option<&Path>,
) -> CliResult<()> {
    let files = frame_files(input).map_err(validation)?;
    if files.is_empty() {
        return invalid(format!("no .obj/.off frames in {}", input.display()));
    }
    let mut frames = Vec::with_capacity(files.len());
    let mut clean = Vec::new();
    for (i, f) in files.iter().enumerate() {
        let m = load_mesh(f, mesh_format(f)?)?;
        if run.noise > 0.0 {
            frames.push(add_gaussian_noise(
                &m,
                run.noise,
                run.seed.wrapping_add(i as u64),
            )?);
            clean.push(m);
        } else {
            frames.push(m);
        }
    }
    let fine = run.fine.then(|| run.bilateral());
    let out = denoise_dynamic(&frames, &run.denoise(), fine.as_ref())?;
    std::fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    for (f, mesh) in files.iter().zip(&out.frames) {
        save(mesh, &output.join(f.file_name().unwrap_or_default()))?;
    }
    write_echo(run, "denoise-dynamic", &input.display().to_string(), output)?;
    println!(
        "{}: {} frames, basis {:.3}s once, frames {:.3}s",
        output.display(),
        out.frames.len(),
        out.basis_seconds,
        out.frame_seconds
    );
    if let Some(path) = metrics {
        let truths: Vec<Mesh> = match reference {
            Some(dir) => files
                .iter()
                .map(|f| {
                    let p = dir.join(f.file_name().unwrap_or_default());
                    load_mesh(&p, mesh_format(&p)?).map_err(CliError::from)
                })
                .collect::<CliResult<_>>()?,
            None if !clean.is_empty() => clean,
            None => return invalid("metrics need --reference or --noise"),
        };
        let rows = files
            .iter()
            .zip(truths.iter().zip(&out.frames))
            .map(|(f, (t, m))| {
                let name = f
                    .file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                MetricsReport::evaluate(name, t, m)
            })
            .collect::<Result<Vec<_>>>()?;
        MetricsReport::save_csv(&rows, path)?;
    }
    Ok(())
}

pub fn cmd_bench(run: &RunConfig, input: &str, output: &Path) -> CliResult<()> {
    check_input(input)?;
    run.codec().validate()?;
    let mesh = load_input(input)?;
    let rows = bench::bench(&label(input), &mesh, run)?;
    let file = std::fs::File::create(output).map_err(|e| Error::io(output, e))?;
    bench::write_bench_csv(&rows, file)?;
    bench::write_plot_data(&rows, output)?;
    write_echo(run, "bench", input, output)?;
    println!("{}: {} rows", output.display(), rows.len());
    Ok(())
}

pub fn cmd_coherence(run: &RunConfig, inputs: &[String], output: &Path) -> CliResult<()> {
    for i in inputs {
        check_input(i)?;
    }
    let cfg = run.coherence();
    if cfg.k < 2 {
        return invalid("coherence needs k >= 2");
    }
    let meshes: Vec<Mesh> = inputs
        .iter()
        .map(|i| load_input(i))
        .collect::<Result<_>>()?;
    let refs: Vec<&Mesh> = meshes.iter().collect();
    let matrix = coherence_matrix(&refs, &cfg)?;
    let names: Vec<String> = inputs.iter().map(|i| label(i)).collect();
    let file = std::fs::File::create(output).map_err(|e| Error::io(output, e))?;
    bench::write_coherence_csv(&names, &matrix, file)?;
    write_echo(run, "coherence", &inputs.join(","), output)?;
    println!(
        "{}: {}×{} matrix",
        output.display(),
        names.len(),
        names.len()
    );
    Ok(())
}
