//! `rdars` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 validation failure,
//! 3 solver error in at least one run.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rdars_core::channel::sample_channels;
use rdars_core::rng;
use rdars_core::scenario::{build_indicator, derive_statistics, IndicatorPolicy};
use rdars_sim::config::{ExperimentFile, PrelogChoice, SolverChoice};
use rdars_sim::experiments::{run_convergence, run_sweep, run_validate, Baseline, Corruption, SweepKind};
use rdars_sim::output::{write_realization, write_rows, ResultRow};

#[derive(Parser)]
#[command(name = "rdars", version, about = "RDARS-aided massive MIMO uplink: validation, optimization and sweeps")]
struct Cli {
    /// TOML experiment file; defaults to the reference deployment.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Scenario seed (overrides the file).
    #[arg(short, long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 gives strictly serial execution.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output CSV; stdout when absent.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverArgs {
    /// Phase solver of the joint baselines.
    #[arg(long, value_enum)]
    solver: Option<SolverChoice>,
    #[arg(long, value_enum)]
    prelog: Option<PrelogChoice>,
    /// Record per-run wall time (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the closed-form terms with Monte Carlo on random configurations.
    Validate {
        #[arg(long)]
        configs: Option<usize>,
        #[arg(long)]
        draws: Option<usize>,
        /// Scale the analytic RDARS-BS gain (negative control).
        #[arg(long)]
        corrupt_gain: Option<f64>,
    },
    /// Per-iteration optimizer traces for each baseline.
    Converge {
        #[arg(long, value_enum, value_delimiter = ',')]
        baselines: Vec<Baseline>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Final weighted sum rate over a parameter grid.
    Sweep {
        #[arg(long, value_enum)]
        kind: Option<SweepKind>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, value_enum, value_delimiter = ',')]
        baselines: Vec<Baseline>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Write one channel realization of the scenario.
    Dump {
        #[arg(long, default_value_t = 0)]
        draw: u64,
    },
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn apply_solver(file: &mut ExperimentFile, args: &SolverArgs) {
    if let Some(s) = args.solver {
        file.optimizer.phase_solver = s;
    }
    if let Some(p) = args.prelog {
        file.optimizer.prelog = p;
    }
}

fn solver_status(rows: &[ResultRow]) -> ExitCode {
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        log::error!("{failed} run(s) failed");
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let mut file = match &cli.config {
        Some(p) => ExperimentFile::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentFile::default(),
    };
    if let Some(s) = cli.seed {
        file.seed = s;
    }
    let dep = file.scenario.deployment();
    match cli.command {
        Command::Validate { configs, draws, corrupt_gain } => {
            let mut v = file.validate.clone();
            v.configs = configs.unwrap_or(v.configs);
            v.draws = draws.unwrap_or(v.draws);
            let corruption = corrupt_gain.map_or(Corruption::None, Corruption::RdarsGain);
            let report = run_validate(file.seed, &v, corruption)?;
            write_rows(sink(&cli.output)?, &report.rows)?;
            let failures = report.failures();
            log::info!("{} terms, {failures} with |z| > {}, max |z| = {:.3}", report.rows.len(), v.z_threshold, report.max_abs_z());
            Ok(if failures > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::Converge { baselines, solver } => {
            apply_solver(&mut file, &solver);
            let baselines = if baselines.is_empty() { file.converge.baselines.clone() } else { baselines };
            let rows = run_convergence(&dep, file.seed, &baselines, &file.optimizer, solver.timing);
            write_rows(sink(&cli.output)?, &rows)?;
            Ok(solver_status(&rows))
        }
        Command::Sweep { kind, grid, seeds, baselines, solver } => {
            apply_solver(&mut file, &solver);
            let mut s = file.sweep.clone();
            s.kind = kind.unwrap_or(s.kind);
            if !grid.is_empty() {
                s.grid = grid;
            }
            if !seeds.is_empty() {
                s.seeds = seeds;
            }
            if !baselines.is_empty() {
                s.baselines = baselines;
            }
            s.validate()?;
            let rows = run_sweep(&dep, s.kind, &s.grid, &s.seeds, &s.baselines, &file.optimizer, solver.timing)?;
            write_rows(sink(&cli.output)?, &rows)?;
            Ok(solver_status(&rows))
        }
        Command::Dump { draw } => {
            let scenario = dep.realize(file.seed)?;
            let ind = build_indicator(dep.rdars_array.len(), dep.connected, IndicatorPolicy::TopA)?;
            let csi = derive_statistics(&scenario.config, &scenario.geometry, &ind)?;
            let real = sample_channels(&csi, &scenario.config, &mut rng::stream(file.seed, draw));
            write_realization(sink(&cli.output)?, &real)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(1)
        }
    }
}
