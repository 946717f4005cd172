//! Subcommand bodies, kept out of `main` so tests can call them.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use steuler_core::geometry::build_structure_tables;
use steuler_core::basis::TruncationSet;
use steuler_core::integrate::Simulator;

use crate::config::Settings;
use crate::manifest::{Clock, RunManifest};
use crate::verify::{run_suite, Suite};
use crate::{ensemble, output};

pub const NORMS_FILE: &str = "norms.csv";
pub const STATES_FILE: &str = "states.csv";
pub const ENSEMBLE_FILE: &str = "ensemble.csv";
pub const STRUCTURE_FILE: &str = "structure_constants.csv";
pub const CHRISTOFFEL_FILE: &str = "christoffel.csv";

fn prepare(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// One path: per-step norms, saved states and the manifest.
pub fn run(settings: &Settings, path_id: u64) -> anyhow::Result<RunManifest> {
    let clock = Clock::start();
    let config = settings.sim_config()?;
    prepare(&settings.out)?;
    let path = Simulator::new(&config)?.run_path(path_id)?;
    let norms = settings.out.join(NORMS_FILE);
    let states = settings.out.join(STATES_FILE);
    output::write_norms(&norms, &path)?;
    output::write_states(&states, &path)?;
    let manifest = clock.finish("run", Some(path_id), settings, &config.noise, vec![norms, states]);
    manifest.write(&settings.out)?;
    Ok(manifest)
}

/// Paths `0..paths`: ensemble statistics and the manifest.
pub fn ensemble(settings: &Settings) -> anyhow::Result<RunManifest> {
    let clock = Clock::start();
    let config = settings.sim_config()?;
    if config.paths < 2 {
        bail!("an ensemble needs at least 2 paths, got {}", config.paths);
    }
    prepare(&settings.out)?;
    let d = ensemble::run(&config)?;
    let file = settings.out.join(ENSEMBLE_FILE);
    output::write_ensemble_file(&file, &d)?;
    let manifest = clock.finish("ensemble", None, settings, &config.noise, vec![file]);
    manifest.write(&settings.out)?;
    Ok(manifest)
}

/// Structure constants and Christoffel symbols of `I_n²`.
pub fn tables(n: usize, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    prepare(out)?;
    let trunc = TruncationSet::new(n);
    let t = build_structure_tables(trunc);
    let c = out.join(STRUCTURE_FILE);
    let g = out.join(CHRISTOFFEL_FILE);
    output::write_table(&c, trunc, t.c_entries())?;
    output::write_table(&g, trunc, t.gamma_entries())?;
    Ok(vec![c, g])
}

/// Prints one line per criterion; true when all pass.
pub fn verify(suite: Suite, quick: bool) -> bool {
    let outcomes = run_suite(suite, quick, |o| println!("{o}"));
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.criterion.to_string()).collect();
    if failed.is_empty() {
        println!("all {} criteria passed", outcomes.len());
        true
    } else {
        println!("failed: {}", failed.join(", "));
        false
    }
}

/// Re-executes the command recorded in a manifest, optionally into another
/// directory.
pub fn replay(manifest: &Path, out: Option<PathBuf>) -> anyhow::Result<RunManifest> {
    let m = RunManifest::read(manifest)?;
    let mut settings = m.settings.clone();
    if let Some(out) = out {
        settings.out = out;
    }
    let problems = settings.problems();
    if !problems.is_empty() {
        bail!("manifest settings are invalid: {}", problems.join("; "));
    }
    match m.command.as_str() {
        "run" => run(&settings, m.path_id.unwrap_or(0)),
        "ensemble" => ensemble(&settings),
        other => bail!("cannot replay command '{other}'"),
    }
}
