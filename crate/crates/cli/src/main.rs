//! `wellgrav` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 numerical failure.

mod cache;
mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wellgrav::quadrature::{kernel_evaluations, MemoryTables, TableSource};

use crate::cache::DiskCache;
use crate::config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "wellgrav", version, about = "Two gravitating particles in neighbouring square wells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// `key = value` file, or a CSV previously written by this tool.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// J-table cache directory; tables stay in memory when omitted.
    #[arg(long, global = true, value_name = "DIR")]
    cache: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Start from the large basis and level counts instead of the desk-scale ones.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Override one key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ground state and its entanglement at one point.
    Solve,
    /// Lowest levels and ground-state entanglement against separation.
    SweepDistance,
    /// Level energies and their shift from the free spectrum.
    SpectrumShift,
    /// Entropy and witness per level with a logarithmic fit.
    EntropySpectrum,
    /// Ground-state entropy and witness over a mass × width grid.
    GridMassWidth,
    /// Ground energy against basis size.
    Converge,
    /// Open-system purity decay.
    Decohere,
    /// Adiabaticity and pseudopotential scales.
    Feasibility,
    /// One level's wavefunction on a position grid.
    Wavefunction,
    /// Print the resolved configuration.
    ShowConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Library(#[from] wellgrav::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Setup(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Library(e) if !e.is_input_error() => 2,
            _ => 1,
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = if cli.paper_scale {
        RunConfig::paper_scale()
    } else {
        RunConfig::default()
    };
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Syntax {
            path: "--set".into(),
            line: 0,
            text: kv.clone(),
        })?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(cache) = &cli.cache {
        cfg.cache = Some(cache.clone());
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = resolve(&cli)?;
    if let Command::ShowConfig = cli.command {
        for (k, v) in cfg.entries() {
            println!("{k} = {v}");
        }
        return Ok(());
    }
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .map_err(|e| Failure::Setup(format!("worker pool: {e}")))?;
    }
    let disk = match &cfg.cache {
        Some(dir) => Some(DiskCache::open(dir, cfg.accuracy)?),
        None => None,
    };
    let memory = MemoryTables::new(cfg.accuracy);
    let tables: &dyn TableSource = match &disk {
        Some(d) => d,
        None => &memory,
    };
    let written = match cli.command {
        Command::Solve => commands::solve(&cfg, tables),
        Command::SweepDistance => commands::sweep_distance(&cfg, tables),
        Command::SpectrumShift => commands::spectrum(&cfg, tables),
        Command::EntropySpectrum => commands::entropy(&cfg, tables),
        Command::GridMassWidth => commands::grid(&cfg, tables),
        Command::Converge => commands::converge(&cfg, tables),
        Command::Decohere => commands::decohere(&cfg, tables),
        Command::Feasibility => commands::feasibility(&cfg),
        Command::Wavefunction => commands::wavefunction(&cfg, tables),
        Command::ShowConfig => unreachable!(),
    }?;
    if let Some(d) = &disk {
        log::info!("J-tables: {} built, {} loaded from cache", d.builds(), d.loads());
    }
    log::info!("quadrature kernel evaluations: {}", kernel_evaluations());
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
