//! CSV writers. Numbers use Rust's shortest round-trip formatting so files
//! are reproducible bit for bit.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use steuler_core::basis::TruncationSet;
use steuler_core::integrate::{EnsembleDiagnostics, PathResult};

pub const ENSEMBLE_HEADER: [&str; 10] =
    ["t", "mean_L2", "se_L2", "mean_H1", "se_H1", "envelope_H1", "mean_M", "se_M", "qv_gap", "se_qv"];

pub const TABLE_HEADER: [&str; 4] = ["k", "l", "m", "value"];

fn writer(path: &Path) -> anyhow::Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn num(x: f64) -> String {
    x.to_string()
}

pub fn write_ensemble<W: Write>(out: W, d: &EnsembleDiagnostics) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ENSEMBLE_HEADER)?;
    for i in 0..d.times.len() {
        w.write_record(
            [
                d.times[i],
                d.mean_l2[i],
                d.se_l2[i],
                d.mean_h1[i],
                d.se_h1[i],
                d.envelope_h1[i],
                d.mean_m[i],
                d.se_m[i],
                d.qv_gap[i],
                d.se_qv[i],
            ]
            .map(num),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ensemble_file(path: &Path, d: &EnsembleDiagnostics) -> anyhow::Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_ensemble(std::io::BufWriter::new(f), d)
}

/// Per-step norms: `t,L2,H1`.
pub fn write_norms(path: &Path, p: &PathResult) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "L2", "H1"])?;
    for (i, (l2, h1)) in p.l2.iter().zip(&p.h1).enumerate() {
        w.write_record([num(i as f64 * p.dt), num(*l2), num(*h1)])?;
    }
    w.flush()?;
    Ok(())
}

/// Saved states, one row per time and one column per basis field.
pub fn write_states(path: &Path, p: &PathResult) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    let Some(first) = p.states.first() else {
        return Ok(());
    };
    let mut header = vec!["t".to_string()];
    header.extend(first.trunc().modes().map(|m| m.to_string()));
    w.write_record(&header)?;
    for (t, s) in p.times.iter().zip(&p.states) {
        let mut row = vec![num(*t)];
        row.extend(s.coeffs().iter().map(|&c| num(c)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Sparse `k,l,m,value` table with basis-field labels.
pub fn write_table<I>(path: &Path, trunc: TruncationSet, entries: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = (usize, usize, usize, f64)>,
{
    let mut w = writer(path)?;
    w.write_record(TABLE_HEADER)?;
    for (a, b, d, v) in entries {
        w.write_record([
            trunc.mode_at(a).to_string(),
            trunc.mode_at(b).to_string(),
            trunc.mode_at(d).to_string(),
            num(v),
        ])?;
    }
    w.flush()?;
    Ok(())
}
