//! Command-line front end for the experiment harness.
//!
//! Exit status: 0 on success, 1 when a verification run finds a violated
//! inequality or a trial fails, 2 on a configuration or I/O error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hideseek::harness::{run_experiment, write_report, ExperimentConfig, ExperimentKind};
use hideseek::Error;

#[derive(Parser)]
#[command(name = "hideseek", version, about = "Hide-and-seek experiments under communication and memory budgets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON experiment configuration. Without it the built-in default for the subcommand is used.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,
    /// CSV output path; a JSON sidecar is written next to it. Without it the CSV goes to stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Success probability or sample threshold on the dense hide-and-seek problem
    Hideseek,
    /// Regret curves of Hedge and the one-bit bandit learner
    Regret,
    /// Planted-pair detection in the sparse PCA family
    Sparsepca,
    /// Empirical matrix optimization over sampled matrices
    Stochopt,
    /// Randomized and exhaustive checks of the information inequalities
    Verify,
    /// Exhaustive KL bound sweep over all small deterministic protocols
    Enumerate,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Hideseek => ExperimentKind::Hideseek,
            Command::Regret => ExperimentKind::Regret,
            Command::Sparsepca => ExperimentKind::Sparsepca,
            Command::Stochopt => ExperimentKind::Stochopt,
            Command::Verify => ExperimentKind::Verify,
            Command::Enumerate => ExperimentKind::Enumerate,
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Trial { .. } | Error::TargetNotBracketed { .. } => 1,
        _ => 2,
    }
}

fn build_config(kind: ExperimentKind, args: &GlobalArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default_for(kind),
    };
    if cfg.kind() != kind {
        return Err(Error::Config(format!(
            "the config describes a {} experiment but the subcommand is {}",
            cfg.kind().name(),
            kind.name()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(threads) = args.threads {
        cfg.threads = Some(threads);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let kind = cli.command.kind();
    let cfg = build_config(kind, &cli.global)?;
    let report = run_experiment(&cfg)?;
    match &cfg.out {
        Some(path) => {
            write_report(&report, path)?;
            eprintln!("{}: wrote {} rows to {}", kind.name(), report.rows.len(), path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(report.csv_string()?.as_bytes()).and_then(|()| stdout.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(report.passed),
                other => other.map_err(|source| Error::Io { path: "<stdout>".into(), source })?,
            }
        }
    }
    eprintln!("{}", serde_json::to_string_pretty(&report.summary)?);
    if !report.passed {
        eprintln!("{}: check FAILED", kind.name());
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
