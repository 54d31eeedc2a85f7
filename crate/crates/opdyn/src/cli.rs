//! The `opdyn` command line.
//!
//! Settings come from per-model defaults, then an optional `--config` file,
//! then flags; later layers win. Usage problems exit with status 2, failures
//! during a run with status 1. Both print one line to stderr of the form
//! `error kind=<kind> message=<text>`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opdyn_core::exact::MAX_EXACT_SITES;

use crate::config::{HybridConfig, Settings};
use crate::error::{Error, Result};
use crate::io::{self, Results};
use crate::pipeline::{self, Failure};

#[derive(Debug, Parser)]
#[command(name = "opdyn", version, about = "Spin-chain quench dynamics with TEBD and an autoregressive extrapolator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// TEBD over the whole interval; writes series.csv.
    Simulate(RunArgs),
    /// Dense exact evolution over the whole interval; writes series.csv.
    Exact(RunArgs),
    /// TEBD prefix, regressor training, closed-loop prediction, comparison.
    Hybrid(RunArgs),
    /// Hybrid runs and full TEBD baselines over --sizes; writes bench.csv.
    Bench(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub settings: Settings,
    /// TOML file with the same keys as the flags (underscores for dashes).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Exact(_) => "exact",
            Command::Hybrid(_) => "hybrid",
            Command::Bench(_) => "bench",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Simulate(a) | Command::Exact(a) | Command::Hybrid(a) | Command::Bench(a) => a,
        }
    }
}

/// Settings after layering, with the sweep sizes for `bench`.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: HybridConfig,
    pub sizes: Option<Vec<usize>>,
}

pub fn resolve(cmd: &Command) -> Result<Resolved> {
    let args = cmd.args();
    let file = match &args.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let is_bench = matches!(cmd, Command::Bench(_));
    if args.settings.sizes.is_some() && !is_bench {
        return Err(Error::Config(format!("--sizes only applies to bench, not {}", cmd.verb())));
    }
    let merged = args.settings.clone().or(file);
    let config = merged.resolve();
    match cmd {
        Command::Simulate(_) => config.validate_simulation()?,
        Command::Exact(_) => {
            config.validate_simulation()?;
            if config.n_sites > MAX_EXACT_SITES {
                return Err(Error::Config(format!("exact evolution supports at most {MAX_EXACT_SITES} sites")));
            }
        }
        Command::Hybrid(_) | Command::Bench(_) => config.validate()?,
    }
    let sizes = if is_bench {
        let sizes = merged.sizes.ok_or_else(|| Error::Config("bench needs --sizes".into()))?;
        if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
            return Err(Error::Config("bench sizes must all be at least 2".into()));
        }
        Some(sizes)
    } else {
        None
    };
    Ok(Resolved { config, sizes })
}

fn error_line(kind: &str, message: &str) -> String {
    format!("error kind={kind} message={}", message.replace(['\n', '\r'], " "))
}

/// Runs a parsed command, writing a summary to `out` and errors to `err`.
/// Returns the process exit status.
pub fn run_command(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let resolved = match resolve(cmd) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "{}", error_line(e.kind(), &e.to_string()));
            return 2;
        }
    };
    let dir = &cmd.args().out;
    match execute(cmd.verb(), &resolved, dir, out) {
        Ok(None) => 0,
        Ok(Some(f)) => {
            let _ = writeln!(err, "{}", error_line(&f.kind, &f.message));
            1
        }
        Err(e) => {
            let f = Failure::from(&e);
            let mut stub = Results::new(cmd.verb());
            stub.fail(&f);
            let _ = io::ensure_dir(dir).and_then(|_| io::write_report(&dir.join(io::REPORT), &resolved.config, resolved.sizes.as_deref(), &stub));
            let _ = writeln!(err, "{}", error_line(&f.kind, &f.message));
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

/// Returns the failure of a run that still produced a report.
fn execute(verb: &str, r: &Resolved, dir: &Path, out: &mut dyn Write) -> Result<Option<Failure>> {
    let cfg = &r.config;
    io::ensure_dir(dir)?;
    let report_path = dir.join(io::REPORT);
    match verb {
        "simulate" | "exact" => {
            let sim = if verb == "simulate" {
                pipeline::simulate_tebd(cfg, cfg.total_steps)?
            } else {
                pipeline::simulate_exact(cfg, cfg.total_steps)?
            };
            io::write_series_csv(&dir.join(io::SERIES), &sim.series)?;
            io::write_report(&report_path, cfg, None, &Results::from_simulation(verb, &sim))?;
            let _ = writeln!(out, "{verb} ok points={} seconds={:.3} report={}", sim.series.len(), sim.seconds, report_path.display());
            Ok(None)
        }
        "hybrid" => {
            let report = pipeline::hybrid_run(cfg)?;
            io::write_run(dir, &report)?;
            let _ = match report.mean_epsilon {
                Some(m) => writeln!(
                    out,
                    "hybrid {} mean_epsilon={m:.6e} mean_epsilon_prediction={:.6e} report={}",
                    status(&report.failure),
                    report.mean_epsilon_prediction.unwrap_or(f64::NAN),
                    report_path.display()
                ),
                None => writeln!(out, "hybrid {} report={}", status(&report.failure), report_path.display()),
            };
            Ok(report.failure)
        }
        "bench" => {
            let sizes = r.sizes.as_deref().unwrap_or_default();
            let pairs = vec![cfg.train_pairs; sizes.len()];
            let rows = pipeline::bench_scaling(sizes, cfg, &pairs)?;
            io::write_bench_csv(&dir.join(io::BENCH), &rows)?;
            let results = Results::from_bench(&rows);
            io::write_report(&report_path, cfg, Some(sizes), &results)?;
            let _ = writeln!(out, "bench rows={} failed={} csv={}", rows.len(), results.failed_rows.unwrap_or(0), dir.join(io::BENCH).display());
            // failed rows are part of the table, not a failure of the sweep
            Ok(None)
        }
        other => unreachable!("unknown verb {other}"),
    }
}

fn status(f: &Option<Failure>) -> &'static str {
    if f.is_some() {
        "failed"
    } else {
        "ok"
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run_command(&cli.command, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}
