use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "nsbesov",
    version,
    about = "Besov-space diagnostics and a perturbation-form Navier-Stokes solver on the torus",
    args_override_self = true,
    after_help = "Any subcommand also accepts --config FILE: a plain-text file of `key = value` lines \
                  (a bare `key` sets a switch, `#` starts a comment). Flags given on the command line win."
)]
pub struct Cli {
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dyadic spectrum and Besov/caloric norms of a scalar field.
    Analyze(AnalyzeArgs),
    /// Evaluate the smallness criterion for a velocity field.
    Criterion(CriterionArgs),
    /// Criterion sweep over ε for one of the two explicit families.
    ExampleScan(ScanArgs),
    /// Integrate the perturbation equations and record the monitors.
    Solve(SolveArgs),
    /// Run identity and inequality suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LatticeArgs {
    /// Grid points per axis.
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Box length per axis.
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub length: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SourceArgs {
    /// Field source: `zero`, `random`, `mode:K1,K2,K3`, `shear`, `file:PATH`
    /// (scalar commands also accept `random` for a scalar field).
    #[arg(long, default_value = "random")]
    pub field: String,
    /// Seed for random generators.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Max-norm the generated field is scaled to (ignored for files).
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Highest dyadic block a random field may touch.
    #[arg(long)]
    pub max_block: Option<i32>,
    /// Component read from a multi-component file (scalar commands).
    #[arg(long, default_value_t = 0)]
    pub component: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Besov index `s,p,r` (use `inf` for ∞); repeatable.
    #[arg(long = "index", default_value = "0,inf,1")]
    pub indices: Vec<String>,
    /// Also compute the caloric norms for r = 1, 2, ∞.
    #[arg(long)]
    pub caloric: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum FrameArg {
    Standard,
    Diagonal,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CriterionArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// Velocity source: `zero`, `random`, `shear`, `example1`, `example2`,
    /// `file:PATH`. The examples choose their own lattice.
    #[arg(long, default_value = "random")]
    pub field: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long)]
    pub max_block: Option<i32>,
    /// Lebesgue exponent, in (3, 6).
    #[arg(long, default_value_t = 4.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_const: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// ε for the example families.
    #[arg(long, default_value_t = 0.125)]
    pub eps: f64,
    /// α for the first example family.
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    /// Frame of a file input; the examples set their own.
    #[arg(long, value_enum, default_value_t = FrameArg::Standard)]
    pub frame: FrameArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    /// Which family: 1 or 2.
    #[arg(long)]
    pub example: u8,
    /// ε values as comma-separated numbers, or `A..B` for 2^-A, …, 2^-B.
    #[arg(long, default_value = "3..6")]
    pub eps: String,
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    /// Lebesgue exponent; defaults to 5 for family 1 and 4 for family 2.
    #[arg(long)]
    pub p: Option<f64>,
    /// Skip the caloric largeness norm.
    #[arg(long)]
    pub no_caloric_largeness: bool,
    /// Worker threads for independent ε values.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// Velocity source: `zero`, `shear`, `random`, `file:PATH`.
    #[arg(long, default_value = "shear")]
    pub field: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long)]
    pub max_block: Option<i32>,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long = "t-end", default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 4.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    #[arg(long, default_value_t = 10)]
    pub output_every: usize,
    /// Record the integrands of the a-priori balance.
    #[arg(long)]
    pub balance: bool,
    /// Write the final perturbation `v` to this container file.
    #[arg(long)]
    pub save_v: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Suite name, or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Second resolution for the ratio-stability suites.
    #[arg(long, default_value_t = 64)]
    pub n_fine: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for independent suites.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}
