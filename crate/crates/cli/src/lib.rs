//! Driver behind the `sde-contract` binary: reads an experiment config,
//! runs one pipeline and writes a key-value report plus CSV series.

pub mod build;
pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;

/// Why a run stopped; each variant has a stable exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Config(String),
    Infeasible(String),
    Diverged(String),
    Diagnostic(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Diverged(_) => 4,
            Failure::Diagnostic(_) => 5,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Infeasible(m) => write!(f, "certificate infeasible: {m}"),
            Failure::Diverged(m) => write!(f, "simulation diverged: {m}"),
            Failure::Diagnostic(m) => write!(f, "diagnostic failed: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sde-contract", version, about = "Contraction certificates and their empirical checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build a certificate and check it on sampled states.
    Certify(Common),
    /// Synchronously coupled replicas against the certified rate.
    Couple(Common),
    /// Plain trajectories and stationary statistics.
    Simulate(Common),
    /// Moment decay rates of the jump process.
    Pdmp(Common),
    /// Oscillator-chain certificate, with coupling when simulated.
    Chain(Common),
    /// Empirical Wasserstein contraction test.
    Wasserstein(Common),
    /// Concentration of ergodic averages.
    Concentration(Common),
}

impl Command {
    pub fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Certify(c) => ("certify", c),
            Command::Couple(c) => ("couple", c),
            Command::Simulate(c) => ("simulate", c),
            Command::Pdmp(c) => ("pdmp", c),
            Command::Chain(c) => ("chain", c),
            Command::Wasserstein(c) => ("wasserstein", c),
            Command::Concentration(c) => ("concentration", c),
        }
    }
}

/// Options shared by all subcommands.
#[derive(Debug, Clone, PartialEq, Eq, clap::Args)]
pub struct Common {
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Reads, validates and resolves the config, applying a seed override.
pub fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut cfg =
        ExperimentConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", common.config.display())))?;
    if let Some(s) = common.seed {
        cfg.set_seed(s);
    }
    Ok(cfg)
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let (name, common) = cli.command.parts();
    if let Some(n) = common.threads {
        if n == 0 {
            eprintln!("config error: --threads must be at least 1");
            return 2;
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = load_config(common).and_then(|cfg| commands::dispatch(name, &cfg, &common.out));
    match result {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}
