//! Command line front end: scenario ingestion, commands and report output.

mod commands;
mod scenario;
mod verify;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

pub use commands::{cmd_contract, cmd_enumerate, cmd_loc};
pub use scenario::{ContractionSpec, Scenario};
pub use verify::{cmd_verify, run_checks, CheckOutcome};

use crate::error::Result;
use crate::loc::VerifyMode;

/// Output encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

/// A finished command: structured JSON, a CSV table, a text summary and the
/// verdict that decides the exit code.
#[derive(Debug, Clone)]
pub struct Report {
    pub json: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub text: String,
    pub ok: bool,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("reports serialise");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = self.header.join(",");
                s.push('\n');
                for r in &self.rows {
                    let cells: Vec<String> = r.iter().map(|c| csv_cell(c)).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Text => self.text.clone(),
        }
    }
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}

#[derive(Debug, Parser)]
#[command(name = "lattice-loc", version, about = "Exact localisation of lattice field functionals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario JSON document.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Seed for randomised checks.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Re-check the defining pairing property of every localisation.
    #[arg(long, global = true, value_enum, default_value_t = Toggle::On)]
    pub verify: Toggle,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Add wall-clock time to the JSON report (makes reports differ between runs).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// List the local monomial basis with dimensions and relevance.
    Enumerate,
    /// Localise the scenario functional.
    Loc,
    /// Run the randomised identity battery and the negative control.
    Verify,
    /// Run the contraction experiment for 1 - loc.
    Contract,
}

/// Execute a parsed command line; returns the report or the first error.
pub fn execute(cli: &Cli) -> Result<Report> {
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| crate::Error::config("--scenario is required"))?;
    let sc = Scenario::load(path)?;
    let verify = match cli.verify {
        Toggle::On => VerifyMode::On,
        Toggle::Off => VerifyMode::Off,
    };
    let start = std::time::Instant::now();
    let mut report = match cli.command {
        Command::Enumerate => cmd_enumerate(&sc)?,
        Command::Loc => cmd_loc(&sc, verify)?,
        Command::Verify => cmd_verify(&sc, cli.seed)?,
        Command::Contract => cmd_contract(&sc, verify)?,
    };
    if cli.timing {
        if let Value::Object(m) = &mut report.json {
            m.insert("elapsed_ms".into(), Value::from(start.elapsed().as_millis() as u64));
        }
    }
    Ok(report)
}

/// Full entry point: parse arguments, run, write output, return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let out = report.render(cli.format);
            match &cli.out {
                Some(p) => {
                    if let Err(e) = std::fs::write(p, out) {
                        eprintln!("configuration error: cannot write {}: {e}", p.display());
                        return 2;
                    }
                }
                None => print!("{out}"),
            }
            if report.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
