//! Path-parallel ensemble execution.
//!
//! Paths are independent: each worker owns a [`Simulator`] clone and the noise
//! of path `p` depends only on `(seed, p)`. Results are collected in path-id
//! order, so the aggregate does not depend on scheduling.

use rayon::prelude::*;
use steuler_core::basis::SpectralField;
use steuler_core::diagnostics::ProbeForms;
use steuler_core::integrate::{default_probe, EnsembleDiagnostics, PathSummary, SimConfig, Simulator};
use steuler_core::Result;

/// Applies `f` to every path id in parallel; output follows `ids`.
pub fn map_paths<T, F>(config: &SimConfig, ids: &[u64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut Simulator, u64) -> Result<T> + Sync,
{
    let sim = Simulator::new(config)?;
    ids.par_iter().map_init(|| sim.clone(), |s, &id| f(s, id)).collect()
}

pub fn summaries(config: &SimConfig, ids: &[u64], probe: &SpectralField) -> Result<Vec<PathSummary>> {
    let forms = ProbeForms::new(probe, &config.noise);
    map_paths(config, ids, |sim, id| sim.summarize_path(id, &forms))
}

/// Parallel counterpart of `steuler_core::integrate::run_ensemble_ids`.
pub fn run_ids(config: &SimConfig, ids: &[u64], probe: &SpectralField) -> Result<EnsembleDiagnostics> {
    if ids.len() < 2 {
        return Err(steuler_core::Error::TooFewPaths { needed: 2, got: ids.len() });
    }
    let s = summaries(config, ids, probe)?;
    let h1_0 = Simulator::new(config)?.initial().h1_norm_sq();
    Ok(EnsembleDiagnostics::from_summaries(&s, h1_0, config.noise.growth_rate()))
}

/// Paths `0..config.paths` with the default probe.
pub fn run(config: &SimConfig) -> Result<EnsembleDiagnostics> {
    let ids: Vec<u64> = (0..config.paths as u64).collect();
    run_ids(config, &ids, &default_probe(config.trunc()))
}
