//! `landau`: Penrose scans, mode evolution and acceptance checks for linearized
//! weakly collisional Vlasov models.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ScenarioConfig;
use output::{Format, RunDir, RunRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "landau", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario config (TOML); defaults apply to omitted keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Run directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overwrite artifacts of a previous run in the run directory.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Artifact formats to emit; all by default.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
    /// Record wall-clock timestamps and timings (breaks byte-identical reruns).
    #[arg(long, global = true)]
    timestamps: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Certified Penrose margins and margin maps.
    Penrose,
    /// Density modes by the Volterra and/or kinetic solver.
    Evolve,
    /// Acceptance criteria.
    Verify,
    /// Markdown summary of an existing run directory.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Penrose => "penrose",
            Command::Evolve => "evolve",
            Command::Verify => "verify",
            Command::Report => "report",
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    if cli.command == Command::Report {
        let dir = cli
            .out
            .clone()
            .ok_or_else(|| CliError::Validation("report needs --out DIR of an existing run".into()))?;
        print!("{}", commands::report(&dir)?);
        return Ok(());
    }

    let cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| CliError::Validation("no run directory: pass --out or set output.dir".into()))?;
    let hash = cfg.hash();
    let started = cli.timestamps.then(now);
    let mut rundir = RunDir::create(&dir, &hash, &cli.format, cli.force)?;
    let outcome = match cli.command {
        Command::Penrose => commands::penrose(&cfg, &mut rundir)?,
        Command::Evolve => commands::evolve(&cfg, &mut rundir)?,
        Command::Verify => commands::verify(&cfg, &mut rundir, cli.timestamps)?,
        Command::Report => unreachable!("handled above"),
    };
    let record = RunRecord {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command.name().into(),
        config_hash: hash,
        config: cfg,
        artifacts: Vec::new(),
        summary: outcome.summary,
        passed: outcome.passed,
        notes: outcome.notes,
        started,
        finished: cli.timestamps.then(now),
    };
    let path = rundir.finish(record)?;
    eprintln!("wrote {}", path.display());
    match outcome.failure {
        Some(msg) => Err(CliError::Verification(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
