//! `carleson-kit`: batch analyses on the unit disk with JSON reports.

mod commands;
mod config;
mod error;
mod report;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Flags, RunConfig};
use error::CliResult;
use report::write_atomic;

const THREADS_VAR: &str = "CARLESON_KIT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "carleson-kit",
    version,
    about = "Numerical function theory on the unit disk"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Interpolation constants and Gram diagnostics of a point set
    Sequence(Flags),
    /// Carleson norms of a discrete or curve measure
    Carleson(Flags),
    /// Carleson contour of a bounded analytic function, with verification
    Contour(Flags),
    /// Condition sums and embedding norms of a family
    Embedding(Flags),
    /// Uniform minimality, duals and critical subsets of a subspace system
    System(Flags),
    /// Contour nets, Blaschke products and their split for a matrix family
    Construct(Flags),
    /// Integrability hierarchy of a weight on the circle
    Weight(Flags),
}

impl Command {
    fn parts(&self) -> (&'static str, &Flags) {
        match self {
            Self::Sequence(f) => ("sequence", f),
            Self::Carleson(f) => ("carleson", f),
            Self::Contour(f) => ("contour", f),
            Self::Embedding(f) => ("embedding", f),
            Self::System(f) => ("system", f),
            Self::Construct(f) => ("construct", f),
            Self::Weight(f) => ("weight", f),
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        error::CliError::Parameter(format!("{THREADS_VAR} = {v:?} is not a positive integer"))
    })?;
    // a second initialization only happens in tests; the first one wins
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn execute(cli: &Cli) -> CliResult<bool> {
    configure_threads()?;
    let (name, flags) = cli.command.parts();
    debug_assert!(commands::COMMANDS.contains(&name));
    let cfg = RunConfig::resolve(name, flags)?;
    let outcome = commands::run(name, &cfg)?;
    let json = outcome.report.to_json();
    match &cfg.out {
        Some(path) => write_atomic(path, &json)?,
        None => print!("{json}"),
    }
    if let (Some(path), Some(svg)) = (&cfg.svg, &outcome.svg) {
        write_atomic(path, svg)?;
    }
    Ok(outcome.report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
