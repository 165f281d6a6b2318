use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::config::{load_config, load_grid, ExperimentConfig};
use super::datasets::load_standardized;
use super::report::make_report;
use super::run::{fresh_run_dir, persist, run_experiment, write_json};
use crate::benchmarking::{
    rb_experiment, sweep, write_sweep_csv, Knob, RbConfig, DEFAULT_LENGTHS, DEFAULT_SWEEP_NOISE,
};
use crate::error::{Error, Result};
use crate::qelp::hyperparameter_search;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qgssl",
    version,
    about = "Graph SSL with quantum-state diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| format!("bad list entry `{t}`"))
        })
        .collect()
}

// Aliases keep clap from treating a comma-separated list as repeated arguments.
type Seeds = Vec<u64>;
type Sizes = Vec<usize>;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a configured pipeline over its seed list.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds overriding the config.
        #[arg(long, value_parser = parse_list::<u64>)]
        seeds: Option<Seeds>,
        /// Output root overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep circuit layers or qubits.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        knob: Knob,
        #[arg(long, value_parser = parse_list::<usize>)]
        values: Sizes,
        #[arg(long, value_parser = parse_list::<u64>)]
        seeds: Option<Seeds>,
        #[arg(long, default_value_t = DEFAULT_SWEEP_NOISE)]
        noise: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search over k, layers, qubits and alphas.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, value_parser = parse_list::<u64>)]
        seeds: Option<Seeds>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized benchmarking under Pauli noise.
    Rb {
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, value_parser = parse_list::<usize>)]
        lengths: Option<Sizes>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 500)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        qubits: usize,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Aggregate every result.json under a directory into report.csv.
    Report {
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
}

fn config_with(
    path: &Path,
    seeds: Option<Vec<u64>>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig> {
    let mut cfg = load_config(path)?;
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Maps an error to its exit code, printing it.
pub fn report_error(e: &Error) -> i32 {
    match e {
        Error::Divergence {
            alpha1,
            alpha2,
            alpha3,
            spectral_radius,
        } => {
            eprintln!("error: {e}");
            eprintln!(
                "offending parameters: alpha1={alpha1} alpha2={alpha2} alpha3={alpha3} (rho={spectral_radius:.6})"
            );
            EXIT_NOT_CONVERGED
        }
        Error::NonFiniteResidual { .. } => {
            eprintln!("error: {e}");
            EXIT_NOT_CONVERGED
        }
        _ => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn cli_run(config: &Path, seeds: Option<Vec<u64>>, out: Option<PathBuf>) -> Result<i32> {
    let cfg = config_with(config, seeds, out)?;
    let result = run_experiment(&cfg)?;
    let dir = persist(&result)?;
    println!("{}", dir.join("result.json").display());
    println!(
        "{} {}: accuracy {:.4} ± {:.4} over {} seeds",
        result.dataset.name,
        result.method.name(),
        result.aggregate.accuracy.mean,
        result.aggregate.accuracy.std,
        result.aggregate.count
    );
    if result.all_converged {
        Ok(EXIT_OK)
    } else {
        let p = &cfg.pipeline.propagation;
        eprintln!(
            "warning: some seeds hit max_iter={} without converging (alpha1={} alpha2={} alpha3={})",
            p.max_iter, p.alpha1, p.alpha2, p.alpha3
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

pub fn cli_sweep(
    config: &Path,
    knob: Knob,
    values: &[usize],
    seeds: Option<Vec<u64>>,
    noise: f64,
    out: Option<PathBuf>,
) -> Result<i32> {
    let cfg = config_with(config, seeds, out)?;
    let ds = load_standardized(&cfg.dataset)?.dataset;
    let rb = RbConfig {
        noise_p: noise,
        ..cfg.rb.clone().unwrap_or_default()
    };
    let rows = sweep(&ds, &cfg.pipeline, knob, values, &cfg.seeds, &rb)?;
    let dir = fresh_run_dir(
        &cfg.output_dir,
        &format!("{}_sweep_{}", cfg.name, knob.name()),
    )?;
    let path = dir.join("sweep.csv");
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_sweep_csv(&rows, file)?;
    write_json(&dir.join("sweep.json"), &rows)?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}

pub fn cli_tune(
    config: &Path,
    grid: &Path,
    seeds: Option<Vec<u64>>,
    out: Option<PathBuf>,
) -> Result<i32> {
    let cfg = config_with(config, seeds, out)?;
    let grid = load_grid(grid)?;
    let ds = load_standardized(&cfg.dataset)?.dataset;
    let outcome = hyperparameter_search(&ds, &cfg.pipeline, &grid, &cfg.seeds)?;
    let dir = fresh_run_dir(&cfg.output_dir, &format!("{}_tune", cfg.name))?;
    let path = dir.join("leaderboard.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for row in &outcome.leaderboard {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(
        &dir.join("best_config.json"),
        &ExperimentConfig {
            pipeline: outcome.best.clone(),
            ..cfg
        },
    )?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}

pub fn cli_rb(config: RbConfig, out: &Path) -> Result<i32> {
    let result = rb_experiment(&config)?;
    let dir = fresh_run_dir(out, "rb")?;
    write_json(&dir.join("rb.json"), &result)?;
    let path = dir.join("rb.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["length", "survival"])?;
    for (m, s) in result.lengths.iter().zip(&result.survival) {
        w.write_record([m.to_string(), s.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    println!(
        "p = {:.6}  F = {:.6}  r = {:.6}  (A = {:.4}, B = {:.4}{})",
        result.fit_p,
        result.fidelity,
        result.error_per_clifford,
        result.fit_a,
        result.fit_b,
        if result.fit_flagged {
            ", fit flagged"
        } else {
            ""
        }
    );
    Ok(EXIT_OK)
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Run { config, seeds, out } => cli_run(&config, seeds, out),
        Command::Sweep {
            config,
            knob,
            values,
            seeds,
            noise,
            out,
        } => cli_sweep(&config, knob, &values, seeds, noise, out),
        Command::Tune {
            config,
            grid,
            seeds,
            out,
        } => cli_tune(&config, &grid, seeds, out),
        Command::Rb {
            noise,
            lengths,
            reps,
            shots,
            seed,
            qubits,
            out,
        } => cli_rb(
            RbConfig {
                qubits,
                lengths: lengths.unwrap_or_else(|| DEFAULT_LENGTHS.to_vec()),
                repetitions: reps,
                shots,
                noise_p: noise,
                seed,
            },
            &out,
        ),
        Command::Report { out } => make_report(&out).map(|p| {
            println!("{}", p.display());
            EXIT_OK
        }),
    };
    outcome.unwrap_or_else(|e| report_error(&e))
}
