//! `papr-lab`: experiment runner for sign-selection PAPR reduction.
//!
//! Every subcommand writes one CSV table (to `--out` or stdout) and is a
//! pure function of its settings and seed.

mod commands;
mod settings;

use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{Method, SweepParam};
use settings::{Flags, Settings};

#[derive(Debug, Parser)]
#[command(name = "papr-lab", version, about = "Sign-selection PAPR reduction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-block PAPR before/after selection plus an effective-PAPR summary row
    Reduce {
        #[arg(long, value_enum, default_value = "descent")]
        method: Method,
    },
    /// CCDF curves: unreduced, reduced, Z_m samples and the McDiarmid bound
    Ccdf {
        /// Comma-separated prefix lengths m for the Z_m curves
        #[arg(long, value_delimiter = ',', default_value = "0")]
        z_index: Vec<usize>,
        /// Spacing of the dB grid
        #[arg(long, default_value_t = 0.1)]
        grid_step: f64,
    },
    /// Estimated mu, McDiarmid alpha at --level, and the PAPR bound
    Bound,
    /// Effective PAPR over a list of q, m or n values
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let settings = Settings::resolve(cli.flags)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = settings.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().context("building thread pool")?;

    let mut table = Vec::new();
    pool.install(|| match cli.command {
        Command::Reduce { method } => commands::reduce(&settings, method, &mut table),
        Command::Ccdf { z_index, grid_step } => commands::ccdf(&settings, &z_index, grid_step, &mut table),
        Command::Bound => commands::bound(&settings, &mut table),
        Command::Sweep { param, values } => commands::sweep(&settings, param, &values, &mut table),
    })?;

    let mut sink: Box<dyn Write> = match &settings.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    sink.write_all(&table)?;
    sink.flush()?;
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
