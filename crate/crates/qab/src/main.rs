use clap::Parser;
use qab::config::{load_config, Precision, RunConfig};
use qab::output::{emit_report, Format};
use qab::suites::{run_suite, HarnessError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical verification of bound-state S- and K-matrices.
#[derive(Parser, Debug)]
#[command(name = "qab", version)]
struct Cli {
    /// rep-check, coalgebra, smatrix, ybe, kmatrix, bybe, unitarity, limits or all.
    suite: String,
    /// JSON run configuration (defaults are used when absent).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bound-state numbers, comma separated.
    #[arg(long = "M", value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Sampled points per bound-state tuple.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// double or high:<bits>.
    #[arg(long)]
    precision: Option<Precision>,
    /// Report file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv-summary.
    #[arg(long, default_value = "json")]
    format: Format,
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(m) = cli.m {
        cfg.m = m;
    }
    if let Some(s) = cli.samples {
        cfg.samples = s;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = cli.precision {
        cfg.precision = p;
    }
    let report = run_suite(&cli.suite, &cfg)?;
    emit_report(&report, cli.format, cli.out.as_deref())?;
    eprintln!(
        "{}: {} checks, {} failed, {:.1} s",
        report.suite,
        report.checks.len(),
        report.failed,
        report.wall_time_s
    );
    for c in report.checks.iter().filter(|c| !c.check.passed) {
        eprintln!("  FAIL {} / {} M={:?}: {:.3e} (threshold {:.1e})", c.suite, c.check.name, c.check.ms, c.check.residual, c.check.tolerance);
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
