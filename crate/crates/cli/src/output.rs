//! Output plumbing: CSV/JSON selection, destination, float formatting.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use mixprior_core::Coverage;

use crate::commands::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,

    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OutputArgs {
    pub fn writer(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.out {
            Some(path) => Box::new(File::create(path).map_err(CliError::Io)?),
            None => Box::new(io::stdout().lock()),
        })
    }
}

/// 17 significant digits: enough to reproduce the f64 bit pattern, so golden
/// files are exact.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write one CSV table with RFC-style quoting.
pub fn write_csv(
    out: Box<dyn Write>,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(CliError::Io)
}

pub fn write_json(mut out: Box<dyn Write>, value: &serde_json::Value) -> Result<(), CliError> {
    serde_json::to_writer(&mut out, value).map_err(|e| CliError::Io(e.into()))?;
    out.write_all(b"\n").map_err(CliError::Io)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(io::Error::other(e))
}

/// Truncation diagnostics go to stderr so tabular stdout stays clean.
pub fn report_coverage(what: &str, coverage: &Coverage) {
    match coverage.k_max {
        Some(k_max) => eprintln!(
            "{what}: covered prior mass {:.12} with K_max = {k_max}{}",
            coverage.prior_mass,
            if coverage.warned {
                " (WARNING: below the coverage threshold)"
            } else {
                ""
            }
        ),
        None => eprintln!("{what}: exact (no truncation over K)"),
    }
}
