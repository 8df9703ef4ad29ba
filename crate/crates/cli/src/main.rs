//! `planekit` command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage or validation errors, 1 on runtime
//! errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;
mod sample;

use planekit::io::RunConfig;
use planekit::segmentation::{DcrfMode, MrfSolver};

#[derive(Debug, Parser)]
#[command(name = "planekit", version, about = "Piece-wise planar depthmap toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Seed for every random number generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML or JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: PLANEKIT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    Icm,
    AlphaExpansion,
}

impl From<Solver> for MrfSolver {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Icm => MrfSolver::Icm,
            Solver::AlphaExpansion => MrfSolver::AlphaExpansion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CrfMode {
    Auto,
    Exact,
    Truncated,
}

impl From<CrfMode> for DcrfMode {
    fn from(m: CrfMode) -> Self {
        match m {
            CrfMode::Auto => DcrfMode::Auto,
            CrfMode::Exact => DcrfMode::Exact,
            CrfMode::Truncated => DcrfMode::Truncated,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic room into a sample directory.
    Synth(SynthArgs),
    /// Generate ground truth from scene meshes and trajectories.
    GenGt(GenGtArgs),
    /// Extract plane hypotheses from a sample's depth map.
    Extract(ExtractArgs),
    /// MRF segmentation of a sample against plane hypotheses.
    Segment(SegmentArgs),
    /// Dense-CRF refinement of probabilistic masks.
    RefineCrf(RefineCrfArgs),
    /// Plane/pixel recall curves and depth statistics.
    Eval(EvalArgs),
    /// Training losses of a prediction against ground truth.
    EvalLoss(EvalLossArgs),
    /// Room layout estimation.
    Layout(LayoutArgs),
    /// Finite-difference check of the loss gradients.
    GradCheck(GradCheckArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output sample directory.
    #[arg(long)]
    out: PathBuf,
    /// Scene description (JSON); a random room is generated from the seed otherwise.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    max_cuboids: usize,
    /// Gaussian depth noise, meters.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Fraction of valid pixels dropped.
    #[arg(long)]
    dropout: Option<f64>,
    /// Depth quantization step, meters.
    #[arg(long)]
    quantization: Option<f64>,
    /// Also write mesh.ply and trajectory.json with this many subdivisions per face.
    #[arg(long)]
    mesh_subdivisions: Option<usize>,
}

#[derive(Debug, Args)]
struct GenGtArgs {
    /// Directory of scenes, one subdirectory each with mesh.ply (or mesh.obj
    /// and mesh.labels) and trajectory.json.
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    split: Option<f64>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Sample directory.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output planes JSON.
    #[arg(long)]
    out: PathBuf,
    /// Depth PNG (default: sensor_depth.png if present, else depth.png).
    #[arg(long)]
    depth: Option<PathBuf>,
    #[arg(long)]
    max_planes: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Plane hypotheses (JSON).
    #[arg(long)]
    planes: PathBuf,
    /// Output prediction directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    depth: Option<PathBuf>,
    #[arg(long, value_enum)]
    solver: Option<Solver>,
    /// Snap hypotheses to a Manhattan frame and relax axis-aligned edges.
    #[arg(long)]
    manhattan: bool,
}

#[derive(Debug, Args)]
struct RefineCrfArgs {
    /// Probabilistic masks, NPY of shape (height, width, channels).
    #[arg(long)]
    masks: PathBuf,
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the winner-takes-all label PNG.
    #[arg(long)]
    labels_out: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<CrfMode>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Prediction sample directory, or a tree of them.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth sample directory, or a tree of them.
    #[arg(long)]
    gt: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG recall-curve plot.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalLossArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Predicted masks (NPY); one-hot predicted labels otherwise.
    #[arg(long)]
    masks: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LayoutArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Planes JSON (default: planes.json of the sample).
    #[arg(long)]
    planes: Option<PathBuf>,
    /// Masks NPY; one-hot of the sample's labels.png otherwise.
    #[arg(long)]
    masks: Option<PathBuf>,
    /// Output role PNG.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GradCheckArgs {
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(global: &GlobalArgs) -> planekit::Result<RunConfig> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = global.seed.or(cfg.rng_seed) {
        cfg = cfg.with_seed(seed);
    }
    if global.threads.is_some() {
        cfg.threads = global.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn thread_count(cfg: &RunConfig) -> Result<Option<usize>, String> {
    if let Some(t) = cfg.threads {
        return Ok(Some(t));
    }
    match std::env::var("PLANEKIT_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("PLANEKIT_THREADS must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match load_config(&cli.global) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_validation() { 2 } else { 1 });
        }
    };
    match thread_count(&cfg) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command, &cfg, cli.global.format) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
