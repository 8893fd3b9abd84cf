mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{read_json, Grid, RunArgs, SweepConfig};
use error::CliError;
use output::{emit, Format};

#[derive(Debug, Parser)]
#[command(name = "qwalk", version, about = "Periodic and split-step discrete-time quantum walks on a line")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Table format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for sweeps and figures (0 = machine parallelism).
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one walk and write distributions and summaries.
    Walk(RunArgs),
    /// Run a grid over theta1 and/or theta2 and write one row per point.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// JSON sweep configuration ({"base": {...}, "theta1": {...}, "theta2": {...}}).
        #[arg(long, value_name = "PATH", conflicts_with = "config")]
        sweep_config: Option<PathBuf>,
        /// theta1 grid START:STOP:COUNT within [0, pi].
        #[arg(long, value_name = "GRID")]
        grid1: Option<Grid>,
        /// theta2 grid START:STOP:COUNT within [0, pi].
        #[arg(long, value_name = "GRID")]
        grid2: Option<Grid>,
    },
    /// Write the data behind figure preset 1 to 9.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=9))]
        id: u8,
        /// Override the preset step count.
        #[arg(long, value_name = "T")]
        steps: Option<u64>,
    },
    /// Tabulate exact bands and the continuum-limit law.
    Dispersion {
        #[command(flatten)]
        run: RunArgs,
        /// Number of k samples over [-pi, pi].
        #[arg(long, value_name = "N", default_value_t = 1001)]
        k_count: usize,
    },
    /// Run the invariant suite; exits 3 on any violation.
    Selfcheck,
    /// Check a split-step distribution file against a two-period one under x -> 2x, t -> 2t.
    Compare {
        #[arg(long, value_name = "CSV")]
        split: PathBuf,
        #[arg(long, value_name = "CSV")]
        two_period: PathBuf,
        #[arg(long, value_name = "TOL", default_value_t = 1e-10)]
        tol: f64,
    },
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("--threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    match cli.command {
        Command::Walk(args) => {
            let cfg = args.merge(None)?;
            let tables = commands::walk(&cfg.resolve()?)?;
            emit(&cli.out, "walk", cli.format, json!(cfg), &tables, start.elapsed())?;
        }
        Command::Sweep { run, sweep_config, grid1, grid2 } => {
            let mut cfg: SweepConfig = match &sweep_config {
                Some(p) => read_json(p)?,
                None => SweepConfig::default(),
            };
            cfg.base = run.merge(Some(cfg.base))?;
            if grid1.is_some() {
                cfg.theta1 = grid1;
            }
            if grid2.is_some() {
                cfg.theta2 = grid2;
            }
            let table = commands::sweep(&cfg, &pool(cli.threads)?)?;
            emit(&cli.out, "sweep", cli.format, json!(cfg), &[table], start.elapsed())?;
        }
        Command::Figure { id, steps } => {
            let tables = commands::figure(id, steps, &pool(cli.threads)?)?;
            let cfg = json!({
                "figure": id,
                "steps": steps.unwrap_or_else(|| commands::figure_default_steps(id)),
                "preset_pairs": commands::PRESET_PAIRS,
                "initial": {"delta": std::f64::consts::FRAC_PI_4, "eta": 0.0, "profile": "point:0"},
            });
            emit(&cli.out, &format!("figure{id}"), cli.format, cfg, &tables, start.elapsed())?;
        }
        Command::Dispersion { run, k_count } => {
            let cfg = run.merge(None)?;
            let schedule = cfg.schedule.build()?;
            let table = commands::dispersion(&schedule, k_count)?;
            let echo = json!({"schedule": cfg.schedule, "k_count": k_count});
            emit(&cli.out, "dispersion", cli.format, echo, &[table], start.elapsed())?;
        }
        Command::Selfcheck => {
            let checks = commands::selfcheck()?;
            let mut failed = Vec::new();
            for c in &checks {
                let verdict = if c.passed() { "PASS" } else { "FAIL" };
                let op = if c.below { "<=" } else { ">" };
                println!("{verdict} {}: {:.3e} (need {op} {:.0e})", c.name, c.value, c.tolerance);
                if !c.passed() {
                    failed.push(c.name);
                }
            }
            if !failed.is_empty() {
                return Err(CliError::Invariant(format!("failed checks: {}", failed.join(", "))));
            }
        }
        Command::Compare { split, two_period, tol } => {
            let c = commands::compare(&split, &two_period)?;
            println!(
                "split-step step {} vs two-period step {}: max |dP| = {:.3e}, odd-site mass = {:.3e}",
                c.split_step, c.two_period_step, c.max_abs_diff, c.odd_site_mass
            );
            if c.max_abs_diff > tol || c.odd_site_mass > tol {
                return Err(CliError::Invariant(format!("distributions differ beyond {tol:e}")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qwalk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
