//! Command-line front end for sparse secret sharing and the private
//! matrix-multiplication simulators.

mod commands;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

/// Thread-count override for every parallel command.
const THREADS_ENV: &str = "SPARSE_SHARE_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sparse_share::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Config { path: PathBuf, source: toml::de::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
    #[error("recovery failed: {0}")]
    Recovery(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_infeasible() => 3,
            CliError::Core(e) if e.is_recovery_failure() => 4,
            CliError::Recovery(_) => 4,
            CliError::Core(sparse_share::Error::Io(_) | sparse_share::Error::Parse { .. }) => 1,
            CliError::Io { .. } | CliError::Config { .. } | CliError::Csv(_) => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(source: std::io::Error) -> Self {
        CliError::Io { path: PathBuf::from("<stdout>"), source }
    }
}

#[derive(Parser, Debug)]
#[command(name = "sparse-share", version, about = "Sparse secret sharing over finite fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Leakage-optimal one-time pad for target share sparsities.
    SolveOtp(SolveOtpArgs),
    /// Leakage-optimal sparse polynomial sharing for a target share sparsity.
    SolveSss(SolveSssArgs),
    /// Relative leakage of optimal sharing over a grid of share sparsities.
    Curve(CurveArgs),
    /// Largest pad sparsity meeting a relative leakage budget, for every collusion size.
    PstarCurve(PstarCurveArgs),
    /// Split a matrix file into share files.
    Deal(DealArgs),
    /// Rebuild a matrix from two share files.
    Reconstruct(ReconstructArgs),
    /// Matrix-multiplication campaign under a latency model.
    MmSim(MmSimArgs),
    /// Two-cluster campaign under a latency model.
    ClusterSim(ClusterSimArgs),
    /// Permute the rows and columns of a matrix pair, or undo it on a product.
    Permute(PermuteArgs),
    /// Random sparse matrix.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
struct SolveOtpArgs {
    #[arg(long)]
    q: u32,
    /// Sparsity of the private matrix.
    #[arg(long)]
    s: f64,
    /// Target sparsity of the pad R.
    #[arg(long)]
    s_r: f64,
    /// Target sparsity of A + R.
    #[arg(long)]
    s_ar: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveSssArgs {
    #[arg(long)]
    q: u32,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    s_d: f64,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[arg(long)]
    q: u32,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    sd_min: f64,
    #[arg(long)]
    sd_max: f64,
    #[arg(long)]
    step: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PstarCurveArgs {
    #[arg(long)]
    q: u32,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    n2: usize,
    #[arg(long)]
    rho2: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    eps_list: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DealArgs {
    /// Matrix file to share.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Target share sparsity; the leakage-optimal parameters are solved for it.
    #[arg(long, required_unless_present = "uniform", conflicts_with = "uniform")]
    s_d: Option<f64>,
    /// Uniform randomness: no leakage, no sparsity.
    #[arg(long)]
    uniform: bool,
    /// Source sparsity; defaults to the zero fraction of the input.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Share files are written to `<out>.share1` .. `<out>.share<n>`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[arg(long, num_args = 1.., required = true)]
    shares: Vec<PathBuf>,
    /// Accepted for uniformity with the other commands; reconstruction is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LatencyChoice {
    Deterministic,
    ShiftedExp,
    Table,
}

#[derive(Args, Debug)]
struct LatencyArgs {
    #[arg(long, value_enum, default_value = "shifted-exp")]
    latency: LatencyChoice,
    /// Task time for the deterministic model.
    #[arg(long, default_value_t = 1.0)]
    per_task: f64,
    #[arg(long, default_value_t = 1.0)]
    shift: f64,
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Per-worker task durations, one whitespace-separated line per worker.
    #[arg(long, required_if_eq("latency", "table"))]
    table: Option<PathBuf>,
    /// Workers that never return.
    #[arg(long, value_delimiter = ',')]
    stragglers: Vec<usize>,
    /// `worker:k` pairs; the worker returns only its first k results.
    #[arg(long, value_delimiter = ',')]
    partial: Vec<String>,
    /// Draw this many extra full stragglers per trial, seeded by the trial seed.
    #[arg(long, default_value_t = 0)]
    random_stragglers: usize,
}

#[derive(Args, Debug)]
struct CampaignArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// First trial seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    latency: LatencyArgs,
}

#[derive(Args, Debug)]
struct MmSimArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
}

#[derive(Args, Debug)]
struct ClusterSimArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
}

#[derive(Args, Debug)]
struct PermuteArgs {
    #[arg(long, requires = "b", conflicts_with_all = ["product", "perms"])]
    a: Option<PathBuf>,
    #[arg(long, requires = "a")]
    b: Option<PathBuf>,
    /// Permuted product to map back.
    #[arg(long, requires = "perms")]
    product: Option<PathBuf>,
    /// Permutation file written by a forward run.
    #[arg(long, requires = "product")]
    perms: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Forward runs write `<out>.a`, `<out>.b` and `<out>.perm`; inverse runs write `<out>`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    q: u32,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| CliError::Usage(format!("{THREADS_ENV}={v} is not a thread count")))?;
    // only fails if a pool already exists
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::SolveOtp(a) => commands::solve_otp(a),
        Command::SolveSss(a) => commands::solve_sss(a),
        Command::Curve(a) => commands::curve(a),
        Command::PstarCurve(a) => commands::pstar_curve(a),
        Command::Deal(a) => commands::deal(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::MmSim(a) => commands::mm_sim(a.campaign),
        Command::ClusterSim(a) => commands::cluster_sim(a.campaign),
        Command::Permute(a) => commands::permute(a),
        Command::Gen(a) => commands::gen(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
