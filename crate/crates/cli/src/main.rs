mod commands;
mod config;
mod output;
mod perturbation;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "floquet", version, about = "Floquet-Bloch spectra and nonlinear instability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bloch spectrum, λ₀ and the unstable set.
    Spectrum(RunArgs),
    /// Activation rate λ_M(u₀) and its projection report.
    Lambdam(RunArgs),
    /// Eigenvalue counts above λ_M per ξ.
    Hypothesis(RunArgs),
    /// Linear growth sandwich diagnostics.
    Linear(RunArgs),
    /// Nonlinear instability experiment over the δ list.
    Instability(RunArgs),
    /// Damping estimate and dissipative bound.
    Dissipative(RunArgs),
    /// Built-in oracle checks.
    Selftest {
        #[arg(long, env = "FLOQUET_OUT_DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output root; artifacts go to `<out>/<scenario>/<command>/`.
    #[arg(long, env = "FLOQUET_OUT_DIR", default_value = "floquet-out")]
    pub out: PathBuf,
    /// Seed for random perturbation recipes.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Time step for evolution commands.
    #[arg(long)]
    pub dt: Option<f64>,
    /// `KEY=VALUE` with a dotted key into the config, e.g. `grid.periods=32`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(a) => commands::run("spectrum", &a),
        Command::Lambdam(a) => commands::run("lambdam", &a),
        Command::Hypothesis(a) => commands::run("hypothesis", &a),
        Command::Linear(a) => commands::run("linear", &a),
        Command::Instability(a) => commands::run("instability", &a),
        Command::Dissipative(a) => commands::run("dissipative", &a),
        Command::Selftest { out } => commands::selftest(out),
    };
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
