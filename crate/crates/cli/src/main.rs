//! `lplsh`: generate planted instances, build and query indices, run ρ
//! sweeps and the verification suites.
//!
//! Exit codes: 0 success, 1 contract failure, 2 I/O or format error.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// A run finished but its contract did not hold.
    Contract(String),
    Core(lplsh_core::Error),
    Io { path: PathBuf, err: std::io::Error },
    Format(String),
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            err,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Contract(_) => 1,
            CliError::Core(e) if !e.is_io_or_format() => 1,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Contract(m) => write!(f, "contract failure: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, err } => write!(f, "{}: {err}", path.display()),
            CliError::Format(m) => write!(f, "format error: {m}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<lplsh_core::Error> for CliError {
    fn from(e: lplsh_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser, Debug)]
#[command(name = "lplsh", version, about = "Ball-lattice LSH for approximate nearest neighbors in l_p")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a planted dataset, its queries and the ground truth
    Gen(GenArgs),
    /// Build an index and save it
    Build(BuildArgs),
    /// Answer queries from a saved index
    Query(QueryArgs),
    /// Time an index against linear scan
    Bench(BenchArgs),
    /// Estimate p1, p2 and rho over a list of c
    Rho(RhoArgs),
    /// Run the property suites and print a JSON report
    Verify(VerifyArgs),
}

/// Flat `key = value` file; command-line flags take precedence.
#[derive(Args, Debug)]
pub struct ConfigArg {
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Number of queries, each with one planted neighbor
    #[arg(long)]
    pub planted_count: Option<usize>,
    /// Standard deviation of background coordinates
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub max_attempts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset path (.csv or .fvecs)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Query path; defaults to <out stem>.queries.<ext>
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Ground-truth CSV; defaults to <out stem>.truth.csv
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SchemeArgs {
    #[arg(long)]
    pub p: Option<f64>,
    /// main or remark
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub kappa_w: Option<f64>,
    #[arg(long)]
    pub kappa_t: Option<f64>,
    #[arg(long)]
    pub kappa_eps: Option<f64>,
    /// Override the ball radius w
    #[arg(long)]
    pub w: Option<f64>,
    /// Override the projected dimension t
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Override the coverage failure probability
    #[arg(long)]
    pub delta: Option<f64>,
    /// Override the number of shifted lattices U
    #[arg(long)]
    pub num_shifts: Option<u64>,
    /// Override the projection threshold T
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long)]
    pub shift_cap: Option<u64>,
    #[arg(long)]
    pub threshold_samples: Option<usize>,
    #[arg(long)]
    pub threshold_seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Near radius; the data are divided by r before hashing
    #[arg(long)]
    pub r: Option<f64>,
    /// Approximation factor
    #[arg(long)]
    pub c: Option<f64>,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Hashes per table, or "auto"
    #[arg(long)]
    pub k: Option<String>,
    /// Number of tables, or "auto"
    #[arg(long)]
    pub l: Option<String>,
    /// Safety factor of auto (k, L)
    #[arg(long)]
    pub safety: Option<f64>,
    /// Trials per collision estimate of auto (k, L)
    #[arg(long)]
    pub auto_trials: Option<u64>,
    #[arg(long)]
    pub auto_budget: Option<u64>,
    /// Candidate budget per query (default 3L)
    #[arg(long)]
    pub max_candidates: Option<usize>,
    /// Hash evaluations used to measure probe cost and fallback rate
    #[arg(long)]
    pub cost_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Results CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ground-truth CSV from `gen`
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub max_candidates: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Summary CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_candidates: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RhoArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Comma-separated approximation factors
    #[arg(long)]
    pub c_list: Option<String>,
    /// Input dimension of the sampled pairs
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Largest far-pair trial count of the adaptive estimate
    #[arg(long)]
    pub budget: Option<u64>,
    /// Trials of the conditional cross-check (0 disables it)
    #[arg(long)]
    pub check_trials: Option<u64>,
    /// Threshold cache file, read if present and rewritten
    #[arg(long)]
    pub threshold_cache: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub cfg: ConfigArg,
    /// quick or full
    #[arg(long)]
    pub level: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run only this suite
    #[arg(long)]
    pub suite: Option<String>,
    /// Also write the JSON report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Build(a) => commands::build(a),
        Command::Query(a) => commands::query(a),
        Command::Bench(a) => commands::bench(a),
        Command::Rho(a) => commands::rho(a),
        Command::Verify(a) => commands::verify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lplsh: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
