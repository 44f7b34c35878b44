//! Command-line driver: generate instances, compute their constants, run
//! DPPA or DGD, verify recorded trajectories and plot them.

pub mod commands;
pub mod eta;
pub mod fuzzing;
pub mod manifest;
pub mod plot;
pub mod verify;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dppa_core::algorithms::Algorithm;
use dppa_core::mixing::WeightRule;

use crate::eta::EtaSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

/// Result of a command that completed without an operational error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Diverged,
    Invalid,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Ok => EXIT_OK,
            Outcome::Diverged => EXIT_DIVERGED,
            Outcome::Invalid => EXIT_INVALID,
        }
    }
}

/// Input that parsed but failed validation; exits with [`EXIT_INVALID`].
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Debug, Parser)]
#[command(
    name = "dppa",
    version,
    about = "Distributed proximal point and gradient descent experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a connected random graph, its mixing matrix and Gaussian costs.
    Generate(GenerateArgs),
    /// Print the constants and stepsize thresholds of an instance.
    Analyze(AnalyzeArgs),
    /// Run DPPA or DGD and write a trajectory CSV plus a replay manifest.
    Run(RunArgs),
    /// Check a trajectory against the convergence bounds.
    Verify(VerifyArgs),
    /// Plot one or more trajectories as SVG.
    Plot(PlotArgs),
    /// Run over a list of stepsizes and plot the results together.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of agents.
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Rows of each agent's data matrix.
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    /// Decision variable dimension.
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    /// Edge probability of the random graph.
    #[arg(long, default_value_t = 0.4)]
    pub link_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cost scale c in f_i(x) = c ||A_i x - y_i||².
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,
    /// Edge weight rule: max-degree-plus-one or max-degree.
    #[arg(long, default_value_t = WeightRule::MaxDegreePlusOne)]
    pub weights: WeightRule,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Instance JSON (not needed with --manifest).
    #[arg(required_unless_present = "manifest")]
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AlgoArg::Dppa)]
    pub algo: AlgoArg,
    /// Stepsize: a number, or eta_c / eta_dppa with an optional offset or
    /// factor, e.g. `eta_c+0.005` or `0.3*eta_dppa`.
    #[arg(long, required_unless_present = "manifest")]
    pub eta: Option<EtaSpec>,
    #[arg(long, default_value_t = 2000)]
    pub rounds: u64,
    /// Trajectory CSV to write. With --manifest, the replay is written here
    /// instead of being compared against the recorded file only.
    #[arg(long, required_unless_present = "manifest")]
    pub out: Option<PathBuf>,
    /// Where to write the manifest; defaults to `<out stem>.manifest.json`.
    #[arg(long, conflicts_with = "manifest")]
    pub manifest_out: Option<PathBuf>,
    /// Replay a previous run and check it reproduces the recorded bytes.
    #[arg(long, conflicts_with_all = ["instance", "eta", "manifest_out"])]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(required_unless_present = "manifest")]
    pub instance: Option<PathBuf>,
    #[arg(required_unless_present = "manifest")]
    pub trajectory: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    pub eta: Option<EtaSpec>,
    #[arg(long, value_enum, default_value_t = AlgoArg::Dppa)]
    pub algo: AlgoArg,
    /// Take instance, trajectory, stepsize and algorithm from a run manifest.
    #[arg(long, conflicts_with_all = ["instance", "trajectory", "eta"])]
    pub manifest: Option<PathBuf>,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(required = true)]
    pub csv: Vec<PathBuf>,
    /// Comma-separated legend labels; defaults to the file stems.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
    #[arg(long, default_value = "log10 mean error")]
    pub title: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub instance: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.1,1,2")]
    pub etas: Vec<EtaSpec>,
    #[arg(long, value_enum, default_value_t = AlgoArg::Dppa)]
    pub algo: AlgoArg,
    #[arg(long, default_value_t = 2000)]
    pub rounds: u64,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AlgoArg {
    Dppa,
    Dgd,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Dppa => Algorithm::Dppa,
            AlgoArg::Dgd => Algorithm::Dgd,
        }
    }
}

pub fn execute(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Run(a) => commands::run(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Plot(a) => commands::plot(&a),
        Command::Sweep(a) => commands::sweep(&a),
    }
}

/// Parses `args`, runs the command, reports errors on stderr and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(outcome) => outcome.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invalid>().is_some() {
                EXIT_INVALID
            } else {
                EXIT_ERROR
            }
        }
    }
}
