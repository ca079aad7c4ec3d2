//! `tractrix`: runs scenario files and writes plot-ready data.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

#[derive(Parser)]
#[command(name = "tractrix", version, about = "Tractor/tractrix scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Scenario file (a directory for `gallery`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for `gallery`.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub common: Common,
    /// Curvature K; with --ell and --d0 replaces the scenario file.
    #[arg(long, allow_hyphen_values = true)]
    pub curvature: Option<f64>,
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long)]
    pub d0: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    pub s_max: f64,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Allows √K ℓ > π/2 on the sphere.
    #[arg(long)]
    pub long_pole: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulates a tractrix: trace.csv, sweep.txt, cusps.txt.
    Simulate(Common),
    /// Closed-form space-form tables: analytic.csv, le.txt.
    Analytic(AnalyticArgs),
    /// Repeated tractrix shortening: history.csv, iter_<n>.csv.
    Shorten(Common),
    /// Comparison checks: report.toml; exit 3 when a check fails.
    Verify(Common),
    /// Regenerates every scenario of a directory.
    Gallery(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => commands::simulate(c),
        Command::Analytic(a) => commands::analytic(a),
        Command::Shorten(c) => commands::shorten(c),
        Command::Verify(c) => commands::verify(c),
        Command::Gallery(c) => commands::gallery(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Scenario(e) => write!(f, "{e}"),
            Failure::Verification(n) => write!(f, "{n} check(s) failed"),
            Failure::Gallery(failed) => {
                let lines: Vec<&str> = failed.iter().map(|(_, m)| m.as_str()).collect();
                write!(f, "{} scenario(s) failed:\n  {}", failed.len(), lines.join("\n  "))
            }
        }
    }
}
