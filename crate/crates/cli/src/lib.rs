//! Command-line driver: configuration, check orchestration and artefact
//! emission.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
pub mod output;
pub mod suite;

use config::{parse_config, ConfigError, RunConfig};

/// Exit status for an invalid configuration.
pub const EXIT_CONFIG: i32 = 101;
/// Exit status for a file system failure.
pub const EXIT_IO: i32 = 102;
/// Exit status for a simulation or numerical failure.
pub const EXIT_RUNTIME: i32 = 103;
/// Failed-check counts are capped here so they never collide with the codes
/// above.
pub const MAX_FAILED_EXIT: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "jumpdiff", version, about = "Simulate jump diffusions and verify density identities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads. Outputs do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Fit the discretisation bias ε(Δt) from a run at Δt/2.
    #[arg(long)]
    pub dt_halve: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Measure {
    P,
    Q,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a few paths and dump them.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16)]
        paths: u64,
        #[arg(long, value_enum, default_value_t = Measure::P)]
        measure: Measure,
    },
    /// Run the configured check suite.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Scan the summands of the Λ integrand over a grid.
    Scan {
        #[command(flatten)]
        common: Common,
    },
    /// Carré-du-champ cross-checks.
    CdcDemo {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Verify { common }
            | Command::Scan { common }
            | Command::CdcDemo { common } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Verify { .. } => "verify",
            Command::Scan { .. } => "scan",
            Command::CdcDemo { .. } => "cdc-demo",
        }
    }
}

/// Read, parse and validate the configuration, then apply flag overrides.
pub fn load(common: &Common) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| anyhow::Error::new(e).context(format!("reading {}", common.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if common.dt_halve {
        cfg.fit_epsilon = true;
    }
    Ok(cfg)
}

fn exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_RUNTIME
}

#[cfg(feature = "parallel")]
fn set_threads(k: Option<usize>) -> anyhow::Result<usize> {
    if let Some(k) = k {
        // Fails only if a pool already exists, which is harmless here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
    }
    Ok(rayon::current_num_threads())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: Option<usize>) -> anyhow::Result<usize> {
    Ok(1)
}

/// Run a parsed command line and return the process exit status.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok(failed) => failed.min(MAX_FAILED_EXIT) as i32,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: &Command) -> anyhow::Result<usize> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
    let clock = Instant::now();
    let cfg = load(cmd.common())?;
    let threads = set_threads(cmd.common().threads)?;
    let out = output::prepare_dir(&cfg.out_dir)?;
    let reports = match cmd {
        Command::Simulate { paths, measure, .. } => {
            commands::simulate(&cfg, &out, *paths, *measure == Measure::Q)?;
            Vec::new()
        }
        Command::Verify { .. } => commands::verify(&cfg, &out)?,
        Command::Scan { .. } => {
            commands::scan(&cfg, &out)?;
            Vec::new()
        }
        Command::CdcDemo { .. } => commands::cdc_demo(&cfg, &out)?,
    };
    for r in &reports {
        println!(
            "{} {}: estimate {:.6e} target {:.6e} se {:.3e} eps {:.3e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.estimate,
            r.target,
            r.se,
            r.epsilon
        );
    }
    let total_ms = clock.elapsed().as_secs_f64() * 1e3;
    output::write_timing(&out, cmd.name(), started, total_ms, threads, &reports)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    if !reports.is_empty() {
        println!("{failed} of {} checks failed", reports.len());
    }
    Ok(failed)
}
