use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fracrom::experiments::ForwardKind;
use fracrom::CaseId;

#[derive(Debug, Parser)]
#[command(
    name = "fracrom",
    version,
    about = "POD/DEIM reduced-order models for time-fractional diffusion"
)]
pub struct Cli {
    /// Seed for every random draw (observation noise).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the full-order model at one fractional order.
    FomSolve(FomSolveArgs),
    /// Full-order runs at sample orders, written as snapshot matrices.
    Snapshots(SnapshotArgs),
    /// POD basis (and DEIM operator) from a snapshot manifest.
    BuildRom(BuildRomArgs),
    /// Solve the reduced model stored in a manifest.
    RomSolve(RomSolveArgs),
    /// Identify the fractional order from final-time observations.
    Identify(IdentifyArgs),
    /// Recompute one of the published tables and compare.
    ReproduceTable(ReproduceArgs),
    /// Time full-order against reduced-order solves.
    Bench(BenchArgs),
}

/// Benchmark case or custom problem plus grid overrides.
#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Benchmark case.
    #[arg(long, value_parser = parse_case, required_unless_present = "config", conflicts_with = "config")]
    pub problem: Option<CaseId>,
    /// TOML file describing a custom problem with expression data.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Interior nodes per axis.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of time steps.
    #[arg(long)]
    pub m: Option<usize>,
    /// Final time. Without `--m` the step is kept at 1/64.
    #[arg(long)]
    pub final_time: Option<f64>,
}

fn parse_case(s: &str) -> Result<CaseId, String> {
    s.parse::<CaseId>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct FomSolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub beta: f64,
    /// Write the trajectory (`N x (M+1)` matrix file).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated sample orders.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub samples: Vec<f64>,
    /// Output directory for the manifest and matrix files.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildRomArgs {
    pub manifest: PathBuf,
    /// POD dimension.
    #[arg(long)]
    pub r: usize,
    /// DEIM points; requires nonlinear snapshots.
    #[arg(long)]
    pub s: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RomSolveArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub beta: f64,
    /// Write the lifted trajectory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    pub manifest: PathBuf,
    /// Observation vector file; synthetic data are generated when absent.
    #[arg(long, conflicts_with_all = ["beta_star", "noise"])]
    pub data: Option<PathBuf>,
    /// True order used for synthetic data.
    #[arg(long)]
    pub beta_star: Option<f64>,
    /// Relative noise level in percent.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta0: f64,
    #[arg(long, value_parser = parse_forward, default_value = "rom")]
    pub forward: ForwardKind,
    /// Iteration trace output (CSV).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha0: f64,
    /// Drop the damping term from the step.
    #[arg(long)]
    pub unregularized: bool,
}

fn parse_forward(s: &str) -> Result<ForwardKind, String> {
    s.parse::<ForwardKind>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_parser = clap::value_parser!(u8).range(1..=8))]
    pub table: u8,
    /// Tables 7 and 8: skip the full-order identification runs.
    #[arg(long)]
    pub rom_only: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// POD dimension; the case default when absent.
    #[arg(long)]
    pub r: Option<usize>,
    /// DEIM points; the case default when absent.
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
}
