//! Batch runner: reads an experiment config, runs one command and writes
//! its reports.

pub mod commands;
pub mod config;
mod output;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use config::ExperimentConfig;
pub use output::{config_hash, Artifact};

pub const OUT_DIR_ENV: &str = "BSG_OUT_DIR";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Failure {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] bsg_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        use bsg_core::Error as E;
        match self {
            Failure::Config(_) => 2,
            Failure::Core(E::Domain(_) | E::Precondition(_)) => 2,
            Failure::Core(E::Numerical(_)) | Failure::Io(_) => 3,
            Failure::Core(E::Resource(_)) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    ValidateKernel,
    Cumulants,
    RenormFlow,
    OnsagerAudit,
    Gibbs,
    FourierDuality,
    Correlations,
    BracketScan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ValidateKernel => "validate-kernel",
            Command::Cumulants => "cumulants",
            Command::RenormFlow => "renorm-flow",
            Command::OnsagerAudit => "onsager-audit",
            Command::Gibbs => "gibbs",
            Command::FourierDuality => "fourier-duality",
            Command::Correlations => "correlations",
            Command::BracketScan => "bracket-scan",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bsg", version, about = "Sine-Gordon / log-gas experiments at finite cutoff")]
pub struct Args {
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `execution.master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `execution.workers`.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory; takes precedence over `BSG_OUT_DIR` and `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything a command needs besides the parsed config.
#[derive(Debug, Clone)]
pub struct Context {
    pub config_hash: String,
    pub master_seed: u64,
    pub workers: usize,
}

/// Files written by a successful run and its one-line summaries.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Runs `args`; nothing is written unless every stage succeeds.
pub fn run(args: &Args) -> Result<RunReport, Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(s) = args.seed {
        config.execution.master_seed = s;
    }
    if let Some(w) = args.workers {
        config.execution.workers = w;
    }
    config.validate()?;
    let out_dir = match (&args.out, std::env::var_os(OUT_DIR_ENV)) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => PathBuf::from(&config.output.directory),
    };
    let ctx = Context {
        config_hash: config_hash(&text),
        master_seed: config.execution.master_seed,
        workers: config.execution.workers,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers)
        .build()
        .map_err(|e| Failure::Io(format!("cannot start worker pool: {e}")))?;
    let artifacts = pool.install(|| commands::execute(args.command, &config, &ctx))?;
    let files = output::write_all(&out_dir, &artifacts)?;
    let summary = artifacts.into_iter().flat_map(|a| a.summary).collect();
    Ok(RunReport { files, summary })
}

/// Process entry point: exit code 0 on success.
pub fn main_with(args: &Args) -> i32 {
    match run(args) {
        Ok(report) => {
            for line in &report.summary {
                println!("{}: {line}", args.command.name());
            }
            0
        }
        Err(e) => {
            eprintln!("{}: {e}", args.command.name());
            e.exit_code()
        }
    }
}
