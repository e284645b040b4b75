//! Command-line front end: `spectrum`, `flow`, `wavefn`, `propagate`,
//! `pathint` and `check`.
//!
//! Every command reads one JSON config (`--config FILE`, plus `--set
//! key=value` overrides), builds its whole output in memory and writes it to
//! stdout or to `--out`, whose extension (`.csv` / `.json`) picks the format.
//! Exit status is 0 on success, 1 when `check` finds a failing invariant and
//! 2 for usage, config and library errors. Errors are reported on stderr as
//! `{"error": kind, "message": text}`.

pub mod checks;
mod commands;
pub mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use checks::{run_checks, CheckConfig, CheckReport, CheckResult};
pub use output::{Cell, Table};

use crate::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Library(#[from] Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Library(e) => e.kind(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "heisenrep", version, about = "Spectra, modes and propagators on the punctured plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config entry, e.g. --set params.omega=2 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file; .csv or .json. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Oscillator levels (lambda, n_r, ell, energy) at a list of lambdas.
    Spectrum(Common),
    /// Spectral-flow scan over a lambda interval.
    Flow(Common),
    /// Sampled radial eigenmode.
    Wavefn(Common),
    /// Propagator evaluations, single or batch.
    Propagate(Common),
    /// Path-integral convergence study against the spectral value.
    Pathint(Common),
    /// Invariant-check suite.
    Check(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// What a command produced: a table, its JSON rendering, and whether every
/// invariant held.
pub struct Output {
    pub table: Table,
    pub json: serde_json::Value,
    pub default_format: Format,
    pub failure: Option<String>,
}

/// Runs the command line and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            report_error(&CliError::Usage(e.to_string().trim().to_string()));
            return 2;
        }
    };
    match execute(cli) {
        Ok(None) => 0,
        Ok(Some(msg)) => {
            eprintln!("{}", serde_json::json!({"error": "invariant", "message": msg}));
            1
        }
        Err(e) => {
            report_error(&e);
            2
        }
    }
}

fn report_error(e: &CliError) {
    eprintln!("{}", serde_json::json!({"error": e.kind(), "message": e.to_string()}));
}

fn execute(cli: Cli) -> Result<Option<String>, CliError> {
    let (common, name) = match &cli.command {
        Command::Spectrum(c) => (c, "spectrum"),
        Command::Flow(c) => (c, "flow"),
        Command::Wavefn(c) => (c, "wavefn"),
        Command::Propagate(c) => (c, "propagate"),
        Command::Pathint(c) => (c, "pathint"),
        Command::Check(c) => (c, "check"),
    };
    let format = match &common.out {
        None => None,
        Some(p) => Some(format_for(p)?),
    };
    let value = config::load(common.config.as_deref(), &common.set)?;
    let out = commands::dispatch(name, value)?;
    let text = match format.unwrap_or(out.default_format) {
        Format::Csv => out.table.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.json).expect("serializable output");
            s.push('\n');
            s
        }
    };
    match &common.out {
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(CliError::Io(format!("stdout: {e}"))),
                _ => {}
            }
        }
        Some(p) => output::write_atomic(p, &text)?,
    }
    Ok(out.failure)
}

fn format_for(path: &std::path::Path) -> Result<Format, CliError> {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref() {
        Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        _ => Err(CliError::Usage(format!("--out must end in .csv or .json, got {}", path.display()))),
    }
}
