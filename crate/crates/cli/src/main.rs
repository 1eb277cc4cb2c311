//! `nnloc`: density checks, shrink tables, risk curves, dominance reports,
//! diagnostics, point estimates and the acceptance suite.
//!
//! Exit codes: 0 success, 1 configuration, 2 assumption violation,
//! 3 existence failure, 4 accuracy not reached.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nnloc::{Error, Execution};

use crate::commands::Report;
use crate::config::{invalid, Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "nnloc", version, about = "Estimation of a nonnegative location parameter with unknown scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration ("schema": 1); defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the data-parallel loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Runs every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Criterion filter for `suite`: a tag substring or an id.
    #[arg(long, global = true)]
    tag: Option<String>,
    /// Relative tolerance of the two-dimensional quadratures.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Checks the structural assumptions on the density generator.
    DensityCheck,
    /// Tabulates the shrink function for each generalized Bayes estimator.
    GTable,
    /// Risk as a function of lambda for each estimator.
    RiskCurve,
    /// Compares the first estimator against the second.
    Dominance,
    /// Sign-change diagnostics of the generalized Bayes estimator (l = 0).
    Diagnostics,
    /// Applies the estimators to a raw sample.
    Estimate {
        /// Sample file: numbers separated by commas, spaces or newlines.
        #[arg(long)]
        sample: Option<PathBuf>,
    },
    /// Runs the acceptance battery.
    Suite,
}

fn resolve(cli: &Cli) -> nnloc::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if let Some(o) = &cli.out {
        cfg.output.path = Some(o.clone());
    }
    if let Some(r) = cli.rel_tol {
        cfg.tolerances.rel = Some(r);
    }
    if let Some(t) = &cli.tag {
        cfg.tag = Some(t.clone());
    }
    if let Command::Estimate { sample: Some(p) } = &cli.command {
        cfg.sample = Some(commands::read_sample(p)?);
    }
    if cli.threads == Some(0) {
        return Err(invalid("--threads must be at least 1"));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> nnloc::Result<(RunConfig, Report)> {
    let mut cfg = resolve(cli)?;
    if let Some(t) = cli.threads {
        nnloc::exec::set_threads(t);
    }
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let report = match &cli.command {
        Command::DensityCheck => commands::density_check(&cfg)?,
        Command::GTable => commands::g_table(&cfg, exec)?,
        Command::RiskCurve => commands::risk_curve(&cfg, exec)?,
        Command::Dominance => commands::dominance(&cfg, exec)?,
        Command::Diagnostics => commands::diagnostics(&cfg, exec)?,
        Command::Estimate { .. } => commands::estimate(&mut cfg, exec)?,
        Command::Suite => {
            let tag = cfg.tag.clone();
            commands::suite(&cfg, exec, tag.as_deref())?
        }
    };
    Ok((cfg, report))
}

fn write_report(cfg: &RunConfig, report: &Report) -> std::io::Result<()> {
    let resolved = cfg.resolved();
    let text = match cfg.output.format {
        Format::Csv => report.to_csv(&resolved),
        Format::Json => report.to_json(&resolved),
    };
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok((cfg, report)) => {
            if let Err(e) = write_report(&cfg, &report) {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => fail(&e),
    }
}
