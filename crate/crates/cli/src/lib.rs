//! Command-line driver for the `beatlaser` library.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{Outcome, Rendered};
use crate::config::{Format, RunConfig};
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "beatlaser", version, about = "Two-photon coherent beat laser: moments, Fock and Langevin routes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration; read from stdin when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; overrides `output.path`. Stdout when neither is set.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Add the truncated Fock-space route to `steady` and `transient`.
    #[arg(long, global = true)]
    pub fock: bool,
    /// Only errors on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Print every derived coefficient.
    Derive,
    /// Steady-state moments and nonclassicality measures.
    Steady,
    /// Moments from the vacuum over the integration window.
    Transient,
    /// Steady state over a one- or two-parameter grid.
    Sweep,
    /// Positive-P Monte Carlo ensemble against the moment equations.
    Mc,
    /// Cross-check the integration, closed-form and Fock routes.
    OracleCheck,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let explicit = cli.format.or(cfg.output.format);
    let format = explicit.unwrap_or(Format::Csv);
    let outcome = match cli.command {
        Command::Derive => {
            let v = commands::derive(&cfg)?;
            match explicit.unwrap_or(Format::Json) {
                Format::Json => Outcome { rendered: Rendered::Json(v), deferred: None },
                Format::Csv => Outcome { rendered: Rendered::Table(commands::derive_table(&v)), deferred: None },
            }
        }
        Command::Steady => commands::steady(&cfg, cli.fock)?,
        Command::Transient => commands::transient(&cfg, cli.fock)?,
        Command::Sweep => commands::sweep(&cfg)?,
        Command::Mc => commands::mc(&cfg)?,
        Command::OracleCheck => commands::oracle_check(&cfg)?,
    };
    let path = cli.out.clone().or_else(|| cfg.output.path.clone());
    emit(&outcome.rendered, format, path)?;
    if let Rendered::Table(t) = &outcome.rendered {
        log::info!("{} rows written", t.rows.len());
    }
    match outcome.deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn emit(rendered: &Rendered, format: Format, path: Option<PathBuf>) -> Result<(), CliError> {
    let mut w: Box<dyn Write> = match &path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Config(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    match rendered {
        Rendered::Table(t) => t.write(format, &mut w)?,
        Rendered::Json(v) => {
            serde_json::to_writer_pretty(&mut w, v)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}
