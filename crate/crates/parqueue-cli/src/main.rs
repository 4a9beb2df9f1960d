//! Command-line front end: wires a JSON experiment config to the solvers
//! and estimators and writes machine-readable reports.
//!
//! Exit codes, one per error class so pipelines can tell regimes apart:
//!   0  success (for `compare`: every agreement verdict passed)
//!   1  compare ran but at least one agreement verdict failed
//!   2  configuration error (parse, validation, unstable model)
//!   3  the stationary solver did not converge
//!   4  no Cramér root along the requested direction
//!   5  no Lundberg root (heavy-tailed or degenerate projection)
//!   6  a regime precondition failed
//!   7  I/O error

use clap::{Parser, Subcommand};
use parqueue::config::ExperimentConfig;
use parqueue::runner::{run, RunMode, RunOptions, RunSummary};
use parqueue::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "parqueue",
    about = "Joint stationary tail H(x,y) of a two-queue parallel network with common batch arrivals: exact solver, Monte Carlo estimators, and tail asymptotics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the JSON experiment config.
    #[arg(long, global = true, default_value = "parqueue.json")]
    config: PathBuf,

    /// Output directory for reports.
    #[arg(long, global = true, default_value = "parqueue-out")]
    out: PathBuf,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; the outputs are byte-identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the truncated stationary distribution and export the grid.
    Exact,
    /// Run the Monte Carlo estimators listed in the config.
    Simulate,
    /// Solve the Cramér system along the configured direction (and fit the
    /// empirical rate when a direction grid is present).
    Cramer,
    /// Evaluate the heavy-tail series along the configured direction.
    Heavy,
    /// Full pipeline: everything the config requests plus agreement
    /// verdicts; exits nonzero if any verdict fails.
    Compare,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::InvalidParameter { .. }
        | Error::Unstable { .. }
        | Error::MgfDomain { .. }
        | Error::DegenerateFit => 2,
        Error::NoConvergence { .. } => 3,
        Error::NoCramerRoot { .. } => 4,
        Error::NoLundbergRoot { .. } => 5,
        Error::PreconditionFailed(_) => 6,
        Error::Io(_) => 7,
    }
}

fn print_outcome(summary: &RunSummary, out: &PathBuf, mode: RunMode) {
    println!(
        "model: E[A] = {}, E[S1] = {}, E[S2] = {}",
        summary.stability.mean_arrival,
        summary.stability.mean_service1,
        summary.stability.mean_service2
    );
    if let Some(g) = &summary.grid_info {
        println!(
            "grid: {}x{} sweeps {} residual {:.3e} deficit {:.3e} balance {:.3e}",
            g.n1, g.n2, g.iterations, g.residual, g.deficit, g.balance_residual
        );
    }
    if let Some(root) = &summary.cramer {
        println!(
            "cramer: gamma = ({}, {}), s = {}, <gamma,eta> = {}",
            root.gamma[0],
            root.gamma[1],
            root.s,
            root.decay_rate()
        );
    }
    if let Some(fit) = &summary.rate_fit {
        println!(
            "rate fit: rate = {}, power = {}, logC = {}, r2 = {}",
            fit.fit.rate, fit.fit.power, fit.fit.logc, fit.fit.r2
        );
    }
    for row in &summary.heavy_series {
        println!(
            "heavy series n = {}: value = {} (+{} truncation, {} terms)",
            row.n, row.value, row.truncation_bound, row.k_used
        );
    }
    for a in &summary.agreements {
        println!(
            "agree ({}, {}) {} vs {}: |delta| = {:.3e} tol = {:.3e} ... {}",
            a.x,
            a.y,
            a.estimator_a,
            a.estimator_b,
            a.delta,
            a.tolerance,
            if a.pass { "PASS" } else { "FAIL" }
        );
    }
    if mode == RunMode::Compare {
        println!(
            "verdict: {}",
            if summary.all_pass { "ALL PASS" } else { "FAIL" }
        );
    }
    println!("reports written to {}", out.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mode = match cli.command {
        Command::Exact => RunMode::Exact,
        Command::Simulate => RunMode::Simulate,
        Command::Cramer => RunMode::Cramer,
        Command::Heavy => RunMode::Heavy,
        Command::Compare => RunMode::Compare,
    };

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let config = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let opts = RunOptions {
        mode,
        out_dir: cli.out.clone(),
        seed_override: cli.seed,
        threads: cli.threads,
    };
    match run(&config, &opts) {
        Ok(summary) => {
            print_outcome(&summary, &cli.out, mode);
            if mode == RunMode::Compare && !summary.all_pass {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
