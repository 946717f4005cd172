use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use steuler::commands;
use steuler::config::{self, Overrides, OUT_ENV};
use steuler::verify::Suite;

/// Monte-Carlo Galerkin simulation of the 2D stochastic Euler equation with
/// transport noise on the torus.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path; writes norms.csv, states.csv and manifest.json.
    Run {
        #[command(flatten)]
        settings: Overrides,
        /// Which path of the ensemble to simulate.
        #[arg(long, default_value_t = 0)]
        path_id: u64,
    },
    /// Simulate paths 0..paths; writes ensemble.csv and manifest.json.
    Ensemble {
        #[command(flatten)]
        settings: Overrides,
    },
    /// Run the acceptance criteria and print one line per criterion.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Smaller ensembles, same tolerances.
        #[arg(long)]
        quick: bool,
    },
    /// Dump structure constants and Christoffel symbols as sparse CSV.
    Tables {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, env = OUT_ENV, default_value = "out")]
        out: PathBuf,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Run { settings, path_id } => {
            let m = commands::run(&config::resolve(&settings)?, path_id)?;
            report(&m.outputs, m.wall_seconds);
        }
        Command::Ensemble { settings } => {
            let m = commands::ensemble(&config::resolve(&settings)?)?;
            report(&m.outputs, m.wall_seconds);
        }
        Command::Verify { suite, quick } => return Ok(commands::verify(suite, quick)),
        Command::Tables { n, out } => {
            for p in commands::tables(n, &out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Replay { manifest, out } => {
            let m = commands::replay(&manifest, out)?;
            report(&m.outputs, m.wall_seconds);
        }
    }
    Ok(true)
}

fn report(outputs: &[PathBuf], seconds: f64) {
    for p in outputs {
        println!("wrote {}", p.display());
    }
    println!("done in {seconds:.1}s");
}
