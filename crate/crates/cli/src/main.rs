use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qdimer_cli::{experiments, verify, ExperimentConfig, Report};

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "QDIMER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "qdimer", version, about = "Double-dimer experiments with quaternionic Kasteleyn matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment description.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Path of the JSON report; data files are written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and validate a graph, and write it as JSON.
    Graph,
    /// Sample double-dimer configurations and compare with enumeration.
    Sample,
    /// Run one invariant suite.
    Verify {
        /// qdet-oracle, gauge, cr-greens, pfaffian or logdet.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Loop-count distributions on cylinders over a grid of aspect ratios.
    Cylinder,
    /// Expected number of loops surrounding two points.
    Twopoint {
        /// Add the Monte Carlo cross-check on a finite grid.
        #[arg(long)]
        mc: bool,
    },
    /// Lamination coefficients by integration over SU(2).
    Haar,
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_VAR}={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Report> {
    configure_threads()?;
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.clone().or_else(|| cfg.output.report.clone());
    log::info!("experiment {:?}, seed {}", cfg.name_or("unnamed"), cfg.seed);
    let start = Instant::now();
    let mut report = match cli.command {
        Command::Graph => experiments::run_graph(&cfg, out.as_deref())?,
        Command::Sample => experiments::run_sample(&cfg, out.as_deref())?,
        Command::Verify { suite } => {
            let suite = suite
                .or_else(|| cfg.verify.suite.clone())
                .with_context(|| format!("no suite given; expected one of {}", verify::SUITES.join(", ")))?;
            verify::run_verify(&suite, &cfg)?
        }
        Command::Cylinder => experiments::run_cylinder(&cfg, out.as_deref())?,
        Command::Twopoint { mc } => {
            cfg.twopoint.mc |= mc;
            experiments::run_twopoint(&cfg, out.as_deref())?
        }
        Command::Haar => experiments::run_haar(&cfg, out.as_deref())?,
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    log::info!("{} checks in {:.2} s", report.checks.len(), report.wall_time_s);
    match &out {
        Some(p) => {
            report.write(p)?;
            println!("{}", report.summary());
        }
        None => println!("{}", report.to_json()?),
    }
    Ok(report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(r) if r.passed() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
