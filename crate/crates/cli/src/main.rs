//! `latdiff`: batch front-end for lattice-diffraction computations.
//!
//! Every subcommand reads a JSON scenario and writes CSV (and optionally
//! SVG) artifacts into the output directory. Identical inputs produce
//! byte-identical CSV outputs, independent of the worker-thread count.

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::commands::Flags;
use crate::output::OutDir;
use crate::scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "latdiff",
    about = "Plane-wave diffraction on a square lattice: solves, directivities, embedding and rank probes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (JSON).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Output directory; overrides the scenario's `outputs`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel solves (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Singular-value threshold for the rank probe.
    #[arg(long, global = true)]
    threshold: Option<f64>,

    /// Emit SVG plots (default).
    #[arg(long, global = true, overrides_with = "no_svg")]
    svg: bool,

    /// Suppress SVG plots.
    #[arg(long, global = true)]
    no_svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the free-space Green table over a canonical index range.
    Green,
    /// Solve the boundary system and dump the densities.
    Solve,
    /// Reconstruct the scattered and total fields on a window.
    Field,
    /// Directivities of a direct solve on an observation grid.
    Directivity,
    /// Direct vs embedded directivities plus a deviation summary.
    Embed,
    /// SVD rank probe of the modified-directivity matrix.
    Rank,
    /// Canonical-geometry formulas over tabulated inputs.
    Canonical,
    /// Built-in validation suite (exit 2 on failure).
    Validate,
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        // Ignore the error when a pool already exists (repeated calls in
        // tests); the first configuration wins.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let scenario_path = cli
        .scenario
        .context("--scenario <path> is required")?;
    let scenario = Scenario::load(&scenario_path)?;
    let out_root = cli
        .out
        .or_else(|| scenario.outputs.clone())
        .unwrap_or_else(|| PathBuf::from("latdiff-out"));
    let out = OutDir::create(&out_root)?;
    let flags = Flags {
        svg: !cli.no_svg,
        threshold: cli.threshold,
    };

    match cli.command {
        Command::Green => commands::green(&scenario, &scenario_path, &out)?,
        Command::Solve => commands::solve(&scenario, &scenario_path, &out)?,
        Command::Field => commands::field(&scenario, &scenario_path, &out)?,
        Command::Directivity => {
            commands::directivity(&scenario, &scenario_path, &out, &flags)?
        }
        Command::Embed => commands::embed(&scenario, &scenario_path, &out, &flags)?,
        Command::Rank => commands::rank(&scenario, &scenario_path, &out, &flags)?,
        Command::Canonical => commands::canonical_cmd(&scenario, &scenario_path, &out)?,
        Command::Validate => {
            if !commands::validate(&scenario, &out)? {
                return Ok(2);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code_for(&err) as u8)
        }
    }
}
