//! `evosemi run <scenario.toml>`: builds the objects a scenario declares and
//! runs its verification pipelines.

mod expr;
mod pipelines;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::report::Status;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "evosemi", version, about = "Run evolution-semigroup verification scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipelines of a scenario file.
    Run {
        scenario: PathBuf,
        /// Directory for reports and tables (default: the scenario's `output`, else `./reports`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a tolerance, e.g. `--tol cocycle=1e-8`.
        #[arg(long = "tol", value_parser = parse_tol)]
        tolerances: Vec<(String, f64)>,
        /// Seed for sampled pairs and triples.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad value in '{s}': {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { scenario, out, tolerances, seed } = cli.command;
    let s = match scenario::load(&scenario, &tolerances, seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let dir = out.or_else(|| s.output.clone()).unwrap_or_else(|| PathBuf::from("reports"));
    println!("scenario {} ({} pipelines, seed {})", s.name, s.pipelines.len(), s.seed);
    let mut failed = false;
    for r in pipelines::run_all(&s) {
        println!("  {}", r.summary());
        failed |= r.status == Status::Fail;
        if let Err(e) = r.write(&dir) {
            eprintln!("error: writing reports to {}: {e}", dir.display());
            return ExitCode::from(EXIT_IO);
        }
    }
    println!("reports written to {}", dir.display());
    if failed {
        ExitCode::from(EXIT_FAIL)
    } else {
        ExitCode::SUCCESS
    }
}
