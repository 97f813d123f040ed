use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use strelax::bench::{self, Table};
use strelax::config::{parse_seeds, ExperimentConfig};
use strelax::{verify, CliError};

#[derive(Parser)]
#[command(name = "strelax", version, about = "String-averaging projection methods with extrapolated steps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean iterations over an (alpha, lambda) grid.
    Grid(RunArgs),
    /// Mean iterations per string count, with and without extrapolation.
    Strings(RunArgs),
    /// One run with its per-iteration diagnostics.
    Solve(RunArgs),
    /// Randomized property suites; exits 1 if any property fails.
    Verify,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; overrides `output` in the config. Stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeds to run, e.g. `0..10` or `1,4,9`.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Leave out wall-clock columns so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = &self.seeds {
            cfg.problem.seeds = parse_seeds(s)?;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(cfg: &ExperimentConfig, table: &Table, with_timing: bool) -> Result<(), CliError> {
    let text = table.to_csv(with_timing)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Grid(args) => {
            let cfg = args.load()?;
            let (table, _) = bench::cmd_grid(&cfg)?;
            emit(&cfg, &table, !args.no_timing)
        }
        Command::Strings(args) => {
            let cfg = args.load()?;
            let (table, _) = bench::cmd_strings(&cfg)?;
            emit(&cfg, &table, !args.no_timing)
        }
        Command::Solve(args) => {
            let cfg = args.load()?;
            let (table, outcome) = bench::cmd_solve(&cfg)?;
            emit(&cfg, &table, true)?;
            let line = bench::summary_line(&outcome);
            if cfg.output.is_some() {
                println!("{line}");
            } else {
                eprintln!("{line}");
            }
            Ok(())
        }
        Command::Verify => {
            let outcomes = verify::run_all();
            for o in &outcomes {
                println!("{o}");
            }
            let failed = outcomes.iter().filter(|o| !o.passed()).count();
            if failed > 0 {
                return Err(CliError::Verification { failed });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("strelax: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
