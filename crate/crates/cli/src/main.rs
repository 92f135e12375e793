//! `supermarket`: batch driver for the supermarket-model experiments.
//!
//! Exit status: 0 success, 1 a bound violation was found, 2 usage or
//! configuration error.

mod config;
mod experiments;
mod output;
mod plot;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::{Config, UsageError};
use output::Run;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "supermarket", version, about = "Experiments on the supermarket queueing model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Replica count; overrides the config.
    #[arg(long, global = true, value_name = "N")]
    replicas: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
enum Command {
    /// Evaluate the heavy-traffic hypotheses for the [model] tuple.
    RegimeCheck,
    /// Run the chain and log observations.
    Simulate,
    /// Time-averaged profile against the fixed point.
    Equilibrium,
    /// Coalescence times of adjacent coupled pairs over a sweep of d.
    Mixing,
    /// Exact drifts against the drift bounds on adversarial states.
    DriftAudit,
    /// Random-walk lemma experiments against their bounds and exact oracles.
    WalkAudit,
    /// Both engines against the exact stationary law of a small capped chain.
    OracleCompare,
    /// Adjacent paths inside the near-equilibrium set.
    PathCheck,
    /// Q_k from a deficient start against its drift ceiling.
    Relaxation,
    /// Render SVG figures from result files.
    Plot {
        #[arg(value_name = "FILE")]
        inputs: Vec<PathBuf>,
    },
}

impl Command {
    fn id(&self) -> &'static str {
        match self {
            Command::RegimeCheck => "regime-check",
            Command::Simulate => "simulate",
            Command::Equilibrium => "equilibrium",
            Command::Mixing => "mixing",
            Command::DriftAudit => "drift-audit",
            Command::WalkAudit => "walk-audit",
            Command::OracleCompare => "oracle-compare",
            Command::PathCheck => "path-check",
            Command::Relaxation => "relaxation",
            Command::Plot { .. } => "plot",
        }
    }
}

fn execute(cli: &Cli) -> Result<usize> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.seed = Some(cli.seed.unwrap_or(cfg.seed()));
    if let Some(r) = cli.replicas {
        cfg.set_replicas(r);
    }
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| config::usage(format!("--threads: {e}")))?;
    }
    let mut run = Run::create(&cli.out)?;
    run.seed("master", cfg.seed());
    let violations = match &cli.command {
        Command::RegimeCheck => experiments::regime(&cfg, &mut run)?,
        Command::Simulate => experiments::simulate_cmd(&cfg, &mut run)?,
        Command::Equilibrium => experiments::equilibrium(&cfg, &mut run)?,
        Command::Mixing => experiments::mixing(&cfg, &mut run)?,
        Command::DriftAudit => experiments::drift_audit(&cfg, &mut run)?,
        Command::WalkAudit => experiments::walk_audit(&cfg, &mut run)?,
        Command::OracleCompare => experiments::oracle_compare(&cfg, &mut run)?,
        Command::PathCheck => experiments::path_check(&cfg, &mut run)?,
        Command::Relaxation => experiments::relaxation(&cfg, &mut run)?,
        Command::Plot { inputs } => experiments::plot_files(inputs, &mut run)?,
    };
    let resolved = serde_json::to_value(&cfg)?;
    run.finish(cli.command.id(), &resolved, rayon::current_num_threads(), violations)?;
    Ok(violations)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(v) => {
            eprintln!("{}: {v} bound violation(s), see {}", cli.command.id(), cli.out.display());
            ExitCode::from(1)
        }
        Err(e) => {
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("usage error: {e:#}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_are_global() {
        let cli = Cli::try_parse_from(["supermarket", "mixing", "--seed", "4", "--replicas", "3", "--out", "x"]).unwrap();
        assert_eq!(cli.command, Command::Mixing);
        assert_eq!((cli.seed, cli.replicas), (Some(4), Some(3)));
        assert!(Cli::try_parse_from(["supermarket", "no-such-experiment"]).is_err());
    }
}
