//! Report serialization: pretty JSON, or a CSV summary with one row per check.

use crate::suites::RunReport;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    CsvSummary,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv-summary" => Ok(Format::CsvSummary),
            _ => Err(format!("unknown format `{s}` (expected json or csv-summary)")),
        }
    }
}

fn ms_label(ms: &[usize]) -> String {
    let inner: Vec<String> = ms.iter().map(usize::to_string).collect();
    format!("({})", inner.join(","))
}

/// Residuals and thresholds carry 17 significant digits.
fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(report: &RunReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["suite", "check", "M", "residual", "threshold", "pass"])?;
    for c in &report.checks {
        let pass = if c.check.skipped { "skipped" } else if c.check.passed { "true" } else { "false" };
        w.write_record([
            c.suite.as_str(),
            c.check.name.as_str(),
            &ms_label(&c.check.ms),
            &sci(c.check.residual),
            &sci(c.check.tolerance),
            pass,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn render(report: &RunReport, format: Format) -> std::io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, report)?;
            buf.push(b'\n');
        }
        Format::CsvSummary => write_csv(report, &mut buf).map_err(std::io::Error::other)?,
    }
    Ok(buf)
}

/// Write to `path`, or stdout when absent.
pub fn emit_report(report: &RunReport, format: Format, path: Option<&Path>) -> std::io::Result<()> {
    let bytes = render(report, format)?;
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => std::io::stdout().lock().write_all(&bytes),
    }
}
