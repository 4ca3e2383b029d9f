//! `gaplattice`: experiment runner for gap counts, return times and their
//! lattice encodings.

mod commands;
mod config;
mod error;
mod fixtures;
mod table;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gaplattice::Budget;
use serde_json::Value;

use crate::commands::{Ctx, Outcome};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::table::Format;

#[derive(Debug, Parser)]
#[command(name = "gaplattice", version, about = "Gap statistics of Kronecker sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Enumeration cap (lattice points or box cells per call).
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Directory of regression fixtures; first run writes, later runs compare.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Gap counts along homothetic sequences or diagonal grids.
    SteinhausScan,
    /// Distinct return-time brackets along shrinking bodies.
    SlaterScan,
    /// Direct gaps against the lattice route on random instances.
    IdentityCheck,
    /// The explicit lattice with prescribed values of F.
    ConstructMeps,
    /// Littlewood products and badly-approximable minima.
    Littlewood,
    /// Random boxes against the Chevallier bound.
    ChevallierFuzz,
    /// Sumset window inclusions against brute force.
    SumsetVerify,
    /// Shortest vectors along the diagonal orbit.
    OrbitTrack,
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let raw: Value = match &cli.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?)?,
        None => Value::Object(Default::default()),
    };
    let cfg = RunConfig::new(raw, cli.seed, cli.precision_bits)?;
    let budget = Budget(
        cli.budget
            .or_else(|| cfg.get("budget").and_then(Value::as_u64))
            .unwrap_or(Budget::default().0),
    );
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let ctx = Ctx {
        cfg: &cfg,
        budget,
        fixtures: cli.fixtures.as_deref(),
    };
    match cli.command {
        Command::SteinhausScan => commands::steinhaus_scan(&ctx),
        Command::SlaterScan => commands::slater_scan(&ctx),
        Command::IdentityCheck => commands::identity_check_cmd(&ctx),
        Command::ConstructMeps => commands::construct_meps(&ctx),
        Command::Littlewood => commands::littlewood(&ctx),
        Command::ChevallierFuzz => commands::chevallier_fuzz_cmd(&ctx),
        Command::SumsetVerify => commands::sumset_verify(&ctx),
        Command::OrbitTrack => commands::orbit_track_cmd(&ctx),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.output {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli);
    let failure = match outcome {
        Ok(Outcome { table, failure }) => match table.render(cli.format).and_then(|t| emit(&cli, &t)) {
            Ok(()) => failure,
            Err(e) => Some(e),
        },
        Err(e) => Some(e),
    };
    match failure {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("gaplattice: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
