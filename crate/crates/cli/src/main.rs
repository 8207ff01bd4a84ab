//! `depthprior-mvs`: batch front end for synthetic scene generation, sensor
//! depth synthesis, reconstruction, fusion and evaluation.
//!
//! Exit status is 0 on success, 1 on an internal failure and 2 on a user or
//! configuration error. Errors are printed as one `error[kind]: message`
//! line on stderr.

mod commands;
mod config;
mod experiment;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use config::Prior;
use depthprior::Error;

/// Thread count read when `--threads` is absent.
const THREADS_ENV: &str = "DEPTHPRIOR_MVS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "depthprior-mvs", version, about = "Multi-view stereo with optional depth priors")]
struct Cli {
    /// Worker threads [default: $DEPTHPRIOR_MVS_THREADS, else all cores].
    /// Results do not depend on this setting.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// TOML run configuration with optional [pipeline], [corruption],
    /// [fusion] and [eval] sections. Flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic scene with exact ground-truth depth.
    Synthscene(SynthsceneArgs),
    /// Synthesize low-quality sensor depth from ground truth.
    SynthDepth(SynthDepthArgs),
    /// Estimate a depth and confidence map for every view.
    Reconstruct(ReconstructArgs),
    /// Fuse per-view depth maps into a point cloud.
    Fuse(FuseArgs),
    /// Compare a point cloud or depth map against a reference.
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Run the prior-versus-no-prior study on generated scenes.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct SynthsceneArgs {
    /// Output scene directory.
    #[arg(long)]
    pub out: PathBuf,
    /// textured_plane or sphere_on_plane.
    #[arg(long, default_value = "textured_plane")]
    pub shape: String,
    /// Albedo contrast in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub texture_strength: f64,
    #[arg(long, default_value_t = 5)]
    pub views: usize,
    #[arg(long, default_value_t = 160)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    #[arg(long, default_value_t = 300.0)]
    pub ring_radius_mm: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub target_distance_mm: f64,
    #[arg(long, default_value_t = 150.0)]
    pub sphere_radius_mm: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["scene", "input"])))]
pub struct SynthDepthArgs {
    /// Scene with depths_gt/; priors are written to its depths_prior/.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Single ground-truth PFM; requires --out.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output PFM (with --in) or output directory (with --scene).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Virtual stereo baseline [default: 100].
    #[arg(long)]
    pub baseline_mm: Option<f64>,
    /// Focal length for a 1600 px wide map [default: 2892].
    #[arg(long)]
    pub focal_px: Option<f64>,
    /// Disparity noise standard deviation [default: 1/6].
    #[arg(long)]
    pub sigma_d: Option<f64>,
    /// Box-downsampling factor [default: 4].
    #[arg(long)]
    pub downsample: Option<usize>,
    /// Noise seed; view i of a scene uses seed + i [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Prior usage [default: none].
    #[arg(long, value_enum)]
    pub prior: Option<Prior>,
    /// Receives depths/, confidence/ and, with ground truth, depth_mae.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Directory of per-view depth PFMs.
    #[arg(long)]
    pub depths: PathBuf,
    /// Confidence PFMs [default: confidence/ next to the depth directory;
    /// full confidence when absent].
    #[arg(long)]
    pub confidence: Option<PathBuf>,
    /// Output binary PLY.
    #[arg(long)]
    pub out: PathBuf,
    /// Source views that must agree [default: 3].
    #[arg(long)]
    pub min_views: Option<usize>,
    /// Round-trip reprojection tolerance in pixels [default: 1.0].
    #[arg(long)]
    pub reproj_px: Option<f64>,
    /// Relative depth tolerance [default: 0.01].
    #[arg(long)]
    pub rel_depth: Option<f64>,
    /// Minimum reference confidence [default: 0.1].
    #[arg(long)]
    pub min_confidence: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum EvaluateCommand {
    /// Accuracy, completeness and overall distance between two clouds.
    Pointcloud {
        #[arg(long)]
        recon: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Distances above this are outliers [default: 20].
        #[arg(long)]
        max_dist_mm: Option<f64>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Depth MAE and inlier ratios against a ground-truth map.
    Depth {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// TOML experiment spec [default: three textured planes at texture
    /// 1.0, 0.5 and 0.1, all three prior modes].
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Receives results.csv and summary.txt.
    #[arg(long)]
    pub out: PathBuf,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Error> {
    let value = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
            Err(_) => return Ok(None),
        },
    };
    if value == 0 {
        return Err(Error::Config("thread count must be >= 1".into()));
    }
    Ok(Some(value))
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = config::RunConfig::load(cli.config.as_deref())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cli.threads)? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    pool.install(|| match cli.command {
        Command::Synthscene(a) => commands::synthscene(&a),
        Command::SynthDepth(a) => commands::synth_depth(&a, &config),
        Command::Reconstruct(a) => commands::reconstruct(&a, &config),
        Command::Fuse(a) => commands::fuse(&a, &config),
        Command::Evaluate(e) => commands::evaluate(&e, &config),
        Command::Experiment(a) => experiment::run(&a, &config),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::from(if e.is_user_error() { 2 } else { 1 })
        }
    }
}
