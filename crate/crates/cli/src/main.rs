// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! `qdc`: run sweeps, export circuits and list fiber types.
//!
//! Exit status is 0 on success, 2 for configuration errors and 1 for
//! failures while running.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdc_core::noise::FiberCatalog;
use qdc_core::runner::{self, ConfigError, ExperimentConfig, RunnerError, ShotsMode, SweepPoint};

#[derive(Parser)]
#[command(name = "qdc", version, about = "Quantum data center emulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file and write CSV records.
    Run(RunArgs),
    /// Write the OpenQASM 3 circuit of one sweep point.
    ExportQasm(ExportArgs),
    /// Inspect built-in tables.
    Catalog {
        #[command(subcommand)]
        what: CatalogCommand,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; defaults to the config's output path, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, conflicts_with = "shots")]
    exact: bool,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    config: PathBuf,
    /// `<fiber>,<steps>`, e.g. `G652D,3`.
    #[arg(long)]
    point: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum CatalogCommand {
    /// Print the fiber attenuation table.
    Fibers {
        /// Additional `{name: alpha_per_km}` JSON table to merge in.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<RunnerError> for Failure {
    fn from(e: RunnerError) -> Self {
        match e {
            RunnerError::Config(c) => c.into(),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut config = runner::load_config(&args.config)?;
    if args.exact {
        config.shots = ShotsMode::Exact;
    }
    if let Some(n) = args.shots {
        config.shots = ShotsMode::Count(n);
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    config.validate()?;
    let records = runner::run(&config)?;
    match args.out.or_else(|| config.output.csv.clone()) {
        Some(path) => runner::export_csv(&records, &path)?,
        None => {
            let stdout = std::io::stdout();
            runner::write_csv(&records, stdout.lock())?;
        }
    }
    Ok(())
}

fn parse_point(config: &ExperimentConfig, point: &str) -> Result<SweepPoint, Failure> {
    let bad = |m: String| Failure::Config(format!("config error at --point: {m}"));
    let (fiber, steps) = point.split_once(',').ok_or_else(|| bad(format!("`{point}` is not <fiber>,<steps>")))?;
    let steps: u32 = steps.trim().parse().map_err(|_| bad(format!("`{steps}` is not a step count")))?;
    let catalog = match &config.fiber_catalog {
        Some(p) => FiberCatalog::load(p).map_err(|e| bad(e.to_string()))?,
        None => FiberCatalog::default(),
    };
    let fiber = catalog.resolve(fiber.trim()).map_err(|e| bad(e.to_string()))?;
    Ok(SweepPoint { fiber, steps })
}

fn export(args: ExportArgs) -> Result<(), Failure> {
    let config = runner::load_config(&args.config)?;
    config.validate()?;
    let point = parse_point(&config, &args.point)?;
    let circuit = runner::point_circuit(&config, &point)?;
    runner::export_qasm(&circuit, &args.out)?;
    Ok(())
}

fn catalog(extra: Option<&Path>) -> Result<(), Failure> {
    let table = match extra {
        Some(p) => FiberCatalog::load(p).map_err(|e| Failure::Config(e.to_string()))?,
        None => FiberCatalog::default(),
    };
    let mut out = std::io::stdout().lock();
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "name,alpha_per_km")?;
        let builtin = FiberCatalog::default();
        for (name, alpha) in builtin.entries().chain(table.entries().filter(|(n, _)| builtin.entries().all(|(b, _)| b != *n))) {
            writeln!(out, "{name},{alpha}")?;
        }
        Ok(())
    };
    write().map_err(|e| Failure::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::ExportQasm(args) => export(args),
        Command::Catalog { what: CatalogCommand::Fibers { catalog: extra } } => catalog(extra.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
