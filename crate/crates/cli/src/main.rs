//! `endotype`: clustering of categorical mood-pain trajectories as a
//! mixture of Markov chains, with residual diagnostics, stationary
//! analysis, intervention what-ifs, and covariate association statistics.

mod commands;
mod config;
mod manifest;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use endotype_core::error::Error;

#[derive(Debug, Parser)]
#[command(name = "endotype", version, about = "Mood-pain trajectory clustering toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse raw daily records into trajectories, counts, and summaries.
    Ingest(IngestArgs),
    /// Fit a null model to pooled counts and report Pearson residuals.
    Residuals(ResidualsArgs),
    /// Fit a mixture of Markov chains to trajectories.
    Cluster(ClusterArgs),
    /// Stationary distributions of fitted cluster matrices.
    Stationary(StationaryArgs),
    /// Apply a mood or pain improvement transform per cluster.
    Intervene(InterveneArgs),
    /// Cluster-versus-covariate association statistics.
    Associate(AssociateArgs),
    /// Generate a synthetic cohort with known labels.
    Simulate(SimulateArgs),
    /// Run simulate -> ingest -> cluster -> stationary -> intervene ->
    /// associate from one config file.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Toolkit configuration file (TOML); flags override file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory receiving the run's artifacts and manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Raw records file (delimited text with a header).
    #[arg(long)]
    pub input: PathBuf,
    /// Drop transitions spanning more than this many calendar days.
    #[arg(long)]
    pub max_gap_days: Option<u32>,
    /// Also write the pooled compound-state transition counts.
    #[arg(long)]
    pub counts_out: bool,
}

#[derive(Debug, Args)]
pub struct ResidualsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Pooled count matrix (labeled CSV).
    #[arg(long)]
    pub counts: PathBuf,
    /// Null model: 1 (uniform off-diagonal) or 2 (neighbour-structured).
    #[arg(long)]
    pub model: u8,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trajectories file produced by `ingest`.
    #[arg(long)]
    pub trajectories: PathBuf,
    /// Number of mixture components to fit.
    #[arg(long)]
    pub k: Option<usize>,
    /// Inclusive k range `lo:hi` for the model-selection table.
    #[arg(long)]
    pub k_range: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// Drop transitions spanning more than this many calendar days.
    #[arg(long)]
    pub max_gap_days: Option<u32>,
}

#[derive(Debug, Args)]
pub struct StationaryArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Fitted model file (JSON).
    #[arg(long, conflicts_with = "matrix")]
    pub model: Option<PathBuf>,
    /// Single labeled transition matrix (CSV).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InterveneArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Fitted model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Improvement target: mood or pain.
    #[arg(long)]
    pub target: Option<String>,
    /// Probability boost; a number or "max".
    #[arg(long)]
    pub beta: Option<String>,
    /// Redistribution share kept away from the worst state.
    #[arg(long)]
    pub split: Option<f64>,
    /// Make beta = 0 a strict no-op.
    #[arg(long)]
    pub strict_noop: bool,
}

#[derive(Debug, Args)]
pub struct AssociateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Assignments file (`id,cluster`).
    #[arg(long)]
    pub assignments: PathBuf,
    /// Covariates file (one row per participant).
    #[arg(long)]
    pub covariates: PathBuf,
    /// Apply the +0.5 continuity correction instead of failing on zero
    /// cells.
    #[arg(long)]
    pub haldane: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Generate from a fitted model file instead of the config's planted
    /// spec.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub participants: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-day probability of losing mood, pain, or both scores.
    #[arg(long)]
    pub missingness: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Toolkit configuration file (TOML) with a [simulate] section.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory receiving one subdirectory per stage.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => commands::ingest::run(&args),
        Command::Residuals(args) => commands::residuals::run(&args),
        Command::Cluster(args) => commands::cluster::run(&args),
        Command::Stationary(args) => commands::stationary::run(&args),
        Command::Intervene(args) => commands::intervene::run(&args),
        Command::Associate(args) => commands::associate::run(&args),
        Command::Simulate(args) => commands::simulate::run(&args),
        Command::Pipeline(args) => commands::pipeline::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Distinct exit codes per failure class: 2 usage, 3 I/O, 4 schema,
/// 5 numeric degeneracy.
fn exit_code(e: &Error) -> u8 {
    match e.code() {
        "invalid-input" => 2,
        "io" => 3,
        "schema" => 4,
        "degenerate" => 5,
        _ => 1,
    }
}
