mod commands;
mod config;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{Flags, RunConfig};

/// Poisson-driven approximations of fBm, the Lei-Nualart process and
/// sub-fractional Brownian motion, with Monte Carlo and quadrature checks.
///
/// Exit codes: 0 pass, 1 invalid configuration, 2 tolerance failure,
/// 3 runtime guard (event budget, quadrature budget, horizon).
#[derive(Debug, Parser)]
#[command(name = "kacstroock", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare oracle kernel inner products with the closed-form covariance
    KernelCheck(Flags),
    /// Run an ensemble and write its statistics
    Simulate(Flags),
    /// Covariance error of the ensemble for a decreasing list of epsilons
    Convergence(Flags),
    /// Cross-covariance of the cos and sin channels of one path
    Independence(Flags),
    /// Sub-fBm from the Lei-Nualart and fBm kernels on opposite channels
    Decompose(Flags),
}

type Workflow = fn(&RunConfig) -> Result<commands::Report>;

impl Command {
    fn parts(&self) -> (&'static str, &Flags, Workflow) {
        match self {
            Command::KernelCheck(f) => ("kernel-check", f, commands::kernel_check),
            Command::Simulate(f) => ("simulate", f, commands::simulate),
            Command::Convergence(f) => ("convergence", f, commands::convergence),
            Command::Independence(f) => ("independence", f, commands::independence),
            Command::Decompose(f) => ("decompose", f, commands::decompose),
        }
    }
}

const EXIT_INVALID: u8 = 1;
const EXIT_TOLERANCE: u8 = 2;
const EXIT_GUARD: u8 = 3;

fn is_guard(e: &kacstroock::Error) -> bool {
    match e {
        kacstroock::Error::NotConverged { .. } => true,
        kacstroock::Error::Replica { source, .. } => is_guard(source),
        other => other.is_runtime_guard(),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|c| c.downcast_ref::<kacstroock::Error>())
        .map_or(EXIT_INVALID, |e| if is_guard(e) { EXIT_GUARD } else { EXIT_INVALID })
}

fn execute(command: &Command) -> Result<bool> {
    let (name, flags, body) = command.parts();
    let mut cfg = RunConfig::from_flags(flags)?;
    let seed = cfg.resolve();
    eprintln!("master_seed: {seed}");
    if cfg.verbosity() > 0 {
        eprintln!("{name}: {}", serde_json::to_string(&cfg)?);
    }
    let start = Instant::now();
    let report = body(&cfg)?;
    let wall_time = start.elapsed().as_secs_f64();
    let summary = output::summary(name, &cfg, wall_time, report.passed, report.metrics);
    output::emit(&cfg, &report.table, &summary)?;
    eprintln!("{name}: {} ({wall_time:.2} s)", if report.passed { "pass" } else { "FAIL" });
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TOLERANCE),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
