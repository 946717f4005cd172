//! Lie brackets of the basis fields, structure constants and Christoffel
//! symbols of the right-invariant `L²` metric, and the Euler drift read as a
//! geodesic equation.
//!
//! Tables are expressed in the orthonormal frame `ê_a = e_a / ‖e_a‖₀`. With
//! the bracket `[X, Y] = (X·∇)Y − (Y·∇)X` and
//!
//! ```text
//! c_{a,b}^d = ⟨[ê_a, ê_b], ê_d⟩₀,   Γ_{k,l}^m = ½(c_{k,l}^m − c_{l,m}^k + c_{m,k}^l)
//! ```
//!
//! the skewness of `(ê_k·∇)` gives `Γ_{k,l}^m = ⟨(ê_k·∇)ê_l, ê_m⟩₀`, so
//! `−Σ Γ_{l,j}^m û^l û^j = −⟨(u·∇)u, ê_m⟩₀` with no further sign or scale
//! convention. The noise term `−Σ_j Γ_{l,j}^m û^j` for a constant direction
//! `l` is `−∂_l u` after undoing the frame scaling; it enters with the
//! opposite sign of the transport noise, which is the same law.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::basis::{BasisMode, ModeKind, SpectralField, TruncationSet};
use crate::dynamics::{transport_apply, triad_integral, Advector};
use crate::{Error, Result};

/// Entries below this are treated as exact zeros.
const ZERO: f64 = 1e-13;

/// `‖e_a‖₀`
pub fn frame_scale(mode: BasisMode) -> f64 {
    libm::sqrt(mode.norm_sq())
}

/// Coefficients in the orthonormal frame: `û^a = u^a ‖e_a‖₀`.
pub fn to_orthonormal(u: &SpectralField) -> Vec<f64> {
    u.iter().map(|(m, c)| c * frame_scale(m)).collect()
}

pub fn from_orthonormal(trunc: TruncationSet, coeffs: &[f64]) -> Result<SpectralField> {
    let c = trunc.modes().zip(coeffs).map(|(m, &x)| x / frame_scale(m)).collect();
    SpectralField::from_coeffs(trunc, c)
}

/// Candidate targets of a product of `a` and `b`: canonical modes at
/// `k_a ± k_b`, inside or outside any truncation.
fn product_targets(a: BasisMode, b: BasisMode) -> Vec<BasisMode> {
    let mut out = Vec::with_capacity(4);
    for q in [a.index + b.index, a.index - b.index] {
        let (q, _) = q.canonical();
        for kind in [ModeKind::C, ModeKind::S] {
            let m = BasisMode::new(kind, q);
            if !out.contains(&m) {
                out.push(m);
            }
        }
    }
    out
}

/// `[e_a, e_b]` in the working basis, as canonical modes with coefficients.
/// The bracket of two trigonometric fields lives on `k_a ± k_b`, and being
/// divergence free it is spanned there by `𝔠_q`, `𝔰_q`.
pub fn mode_bracket(a: BasisMode, b: BasisMode) -> Vec<(BasisMode, f64)> {
    product_targets(a, b)
        .into_iter()
        .filter_map(|d| {
            let v = (triad_integral(a, b, d) - triad_integral(b, a, d)) / d.norm_sq();
            (libm::fabs(v) > ZERO).then_some((d, v))
        })
        .collect()
}

/// `(X·∇)Y − (Y·∇)X`, restricted to the larger of the two truncations.
pub fn lie_bracket(x: &SpectralField, y: &SpectralField) -> SpectralField {
    let trunc = if x.trunc().n() >= y.trunc().n() { x.trunc() } else { y.trunc() };
    let (x, y) = (x.restrict(trunc), y.restrict(trunc));
    let mut out = transport_apply(&y, Advector::Field(&x));
    out.axpy(-1.0, &transport_apply(&x, Advector::Field(&y)));
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureTables {
    trunc: TruncationSet,
    /// `(a, b) → [(d, c_{a,b}^d)]`, both orders of every pair.
    c: BTreeMap<(u32, u32), Vec<(u32, f64)>>,
    /// `(k, l) → [(m, Γ_{k,l}^m)]`
    gamma: BTreeMap<(u32, u32), Vec<(u32, f64)>>,
    /// Pairs `a < b` whose bracket has content outside the truncation.
    incomplete: BTreeSet<(u32, u32)>,
}

impl StructureTables {
    pub fn trunc(&self) -> TruncationSet {
        self.trunc
    }

    /// `c_{a,b}^d` by storage index.
    pub fn c(&self, a: usize, b: usize, d: usize) -> f64 {
        lookup(&self.c, a, b, d)
    }

    pub fn gamma(&self, k: usize, l: usize, m: usize) -> f64 {
        lookup(&self.gamma, k, l, m)
    }

    /// Whether `[ê_a, ê_b]` reaches modes outside the truncation, in which
    /// case `c_{a,b}^·` lists only its resolved part.
    pub fn is_incomplete(&self, a: usize, b: usize) -> bool {
        self.incomplete.contains(&(a.min(b) as u32, a.max(b) as u32))
    }

    /// Nonzero `c_{a,b}^d` as `(a, b, d, value)`.
    pub fn c_entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        flatten(&self.c)
    }

    pub fn gamma_entries(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        flatten(&self.gamma)
    }

    pub fn bracket_row(&self, a: usize, b: usize) -> &[(u32, f64)] {
        self.c.get(&(a as u32, b as u32)).map_or(&[], |v| v.as_slice())
    }
}

fn lookup(t: &BTreeMap<(u32, u32), Vec<(u32, f64)>>, a: usize, b: usize, d: usize) -> f64 {
    t.get(&(a as u32, b as u32))
        .and_then(|row| row.iter().find(|&&(x, _)| x as usize == d))
        .map_or(0.0, |&(_, v)| v)
}

fn flatten(t: &BTreeMap<(u32, u32), Vec<(u32, f64)>>) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
    t.iter().flat_map(|(&(a, b), row)| row.iter().map(move |&(d, v)| (a as usize, b as usize, d as usize, v)))
}

pub fn build_structure_tables(trunc: TruncationSet) -> StructureTables {
    let modes: Vec<BasisMode> = trunc.modes().collect();
    let mut c: BTreeMap<(u32, u32), Vec<(u32, f64)>> = BTreeMap::new();
    let mut incomplete = BTreeSet::new();
    for (a, &ma) in modes.iter().enumerate() {
        for (b, &mb) in modes.iter().enumerate().skip(a + 1) {
            let mut row = Vec::new();
            for (md, v) in mode_bracket(ma, mb) {
                match trunc.index_of(md) {
                    Some((d, _)) => row.push((d as u32, v * frame_scale(md) / (frame_scale(ma) * frame_scale(mb)))),
                    None => {
                        incomplete.insert((a as u32, b as u32));
                    }
                }
            }
            if !row.is_empty() {
                row.sort_by_key(|&(d, _)| d);
                c.insert((b as u32, a as u32), row.iter().map(|&(d, v)| (d, -v)).collect());
                c.insert((a as u32, b as u32), row);
            }
        }
    }

    // Γ_{k,l}^m = ½(c_{k,l}^m − c_{l,m}^k + c_{m,k}^l): each c_{a,b}^d feeds
    // Γ_{a,b}^d, Γ_{d,a}^b and Γ_{b,d}^a
    let mut g: BTreeMap<(u32, u32, u32), f64> = BTreeMap::new();
    for (&(a, b), row) in &c {
        for &(d, v) in row {
            *g.entry((a, b, d)).or_insert(0.0) += 0.5 * v;
            *g.entry((d, a, b)).or_insert(0.0) -= 0.5 * v;
            *g.entry((b, d, a)).or_insert(0.0) += 0.5 * v;
        }
    }
    let mut gamma: BTreeMap<(u32, u32), Vec<(u32, f64)>> = BTreeMap::new();
    for ((k, l, m), v) in g {
        if libm::fabs(v) > ZERO {
            gamma.entry((k, l)).or_default().push((m, v));
        }
    }
    StructureTables { trunc, c, gamma, incomplete }
}

/// Checks that `(u·∇)u` has no content outside the truncation.
fn check_resolved(u: &SpectralField) -> Result<()> {
    let trunc = u.trunc();
    let support: Vec<BasisMode> = u.support().map(|(m, _)| m).collect();
    for (i, &a) in support.iter().enumerate() {
        for &b in &support[i..] {
            for d in product_targets(a, b) {
                if trunc.contains(d.index) {
                    continue;
                }
                let sym = triad_integral(a, b, d) + triad_integral(b, a, d);
                let out = sym * u.get(a) * u.get(b);
                if libm::fabs(sym) > ZERO && out != 0.0 {
                    return Err(Error::UnresolvedInteraction(a.index.k1, a.index.k2, b.index.k1, b.index.k2));
                }
            }
        }
    }
    Ok(())
}

/// `−Σ_{l,j} Γ_{l,j}^m û^l û^j ê_m`, back in the working basis.
pub fn geodesic_drift(u: &SpectralField, tables: &StructureTables) -> Result<SpectralField> {
    if u.trunc() != tables.trunc {
        return Err(Error::TruncationMismatch { expected: tables.trunc.n(), found: u.trunc().n() });
    }
    check_resolved(u)?;
    let uh = to_orthonormal(u);
    let mut out = alloc::vec![0.0; uh.len()];
    for (&(l, j), row) in &tables.gamma {
        let w = uh[l as usize] * uh[j as usize];
        if w == 0.0 {
            continue;
        }
        for &(m, g) in row {
            out[m as usize] -= g * w;
        }
    }
    from_orthonormal(tables.trunc, &out)
}

/// `−Σ_j Γ_{l,j}^m û^j ê_m` for the constant direction `l` along `axis`,
/// scaled by `‖e_l‖₀` so that a unit Brownian increment along `∂_axis`
/// multiplies it. Equals `−∂_axis u`.
pub fn geodesic_noise_term(u: &SpectralField, axis: usize, tables: &StructureTables) -> Result<SpectralField> {
    if u.trunc() != tables.trunc {
        return Err(Error::TruncationMismatch { expected: tables.trunc.n(), found: u.trunc().n() });
    }
    let l = if axis == 0 { BasisMode::c(0, 0) } else { BasisMode::s(0, 0) };
    let uh = to_orthonormal(u);
    let mut out = alloc::vec![0.0; uh.len()];
    let li = tables.trunc.index_of(l).map(|(i, _)| i as u32).unwrap_or(0);
    for (&(k, j), row) in tables.gamma.range((li, 0)..(li + 1, 0)) {
        debug_assert_eq!(k, li);
        for &(m, g) in row {
            out[m as usize] -= g * uh[j as usize] * frame_scale(l);
        }
    }
    from_orthonormal(tables.trunc, &out)
}

/// Largest component of `[[ê_a,ê_b],ê_d] + [[ê_b,ê_d],ê_a] + [[ê_d,ê_a],ê_b]`,
/// or `None` when one of the brackets involved is incomplete.
pub fn jacobi_residual(tables: &StructureTables, a: usize, b: usize, d: usize) -> Option<f64> {
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    for (x, y, z) in [(a, b, d), (b, d, a), (d, a, b)] {
        if tables.is_incomplete(x, y) {
            return None;
        }
        for &(m, cm) in tables.bracket_row(x, y) {
            if tables.is_incomplete(m as usize, z) {
                return None;
            }
            for &(e, ce) in tables.bracket_row(m as usize, z) {
                *acc.entry(e).or_insert(0.0) += cm * ce;
            }
        }
    }
    Some(acc.values().fold(0.0, |m, v| m.max(libm::fabs(*v))))
}
