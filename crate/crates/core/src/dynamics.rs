//! Galerkin operators: Stokes `𝒜`, advection `ℬ(u) = P_n[(u·∇)u]` and the
//! transport terms `P_n[(a·∇)u]` driven by the noise.
//!
//! `ℬ` has two implementations. [`AdvectionTensor`] holds the closed-form
//! coefficients `b_{ikj} = ⟨(e_i·∇)e_k, e_j⟩₀` and is the reference;
//! [`SpectralOps`] evaluates products on a dealiased grid and is the fast path.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::basis::{
    add_packed, derivative, grid_size, scatter_packed, BasisMode, ModeIndex, SpectralField, Trig,
    TruncationSet,
};
use crate::fft::{bin, Fft2};
use crate::{Error, Result};

/// Viscosity of the Itô form. Fixed: it is the Stratonovich correction of the
/// transport noise, not a free parameter.
pub const VISCOSITY: f64 = 0.5;

/// `𝒜f`: every coefficient times `|k|²`.
pub fn stokes_apply(f: &SpectralField) -> SpectralField {
    let trunc = f.trunc();
    let mut out = f.clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= trunc.mode_at(i).index.norm_sq() as f64;
    }
    out
}

fn expand(t: Trig, k: ModeIndex) -> ([(ModeIndex, Complex64); 2], usize) {
    let h = 0.5;
    let z = (ModeIndex::ZERO, Complex64::new(0.0, 0.0));
    match t {
        Trig::One => ([(ModeIndex::ZERO, Complex64::new(1.0, 0.0)), z], 1),
        Trig::Cos => ([(k, Complex64::new(h, 0.0)), (-k, Complex64::new(h, 0.0))], 2),
        Trig::Sin => ([(k, Complex64::new(0.0, -h)), (-k, Complex64::new(0.0, h))], 2),
        Trig::NegSin => ([(k, Complex64::new(0.0, h)), (-k, Complex64::new(0.0, -h))], 2),
    }
}

/// `∫_Θ T_a(k_a·θ) T_b(k_b·θ) T_c(k_c·θ) dθ` by exponential expansion.
fn trig_triple(a: (Trig, ModeIndex), b: (Trig, ModeIndex), c: (Trig, ModeIndex)) -> f64 {
    let (ea, na) = expand(a.0, a.1);
    let (eb, nb) = expand(b.0, b.1);
    let (ec, nc) = expand(c.0, c.1);
    let mut acc = Complex64::new(0.0, 0.0);
    for &(ka, ca) in &ea[..na] {
        for &(kb, cb) in &eb[..nb] {
            for &(kc, cc) in &ec[..nc] {
                if (ka + kb + kc).is_zero() {
                    acc += ca * cb * cc;
                }
            }
        }
    }
    4.0 * PI * PI * acc.re
}

fn derivative_profile(t: Trig) -> Trig {
    match t {
        Trig::One => Trig::One,
        Trig::Cos => Trig::NegSin,
        Trig::Sin => Trig::Cos,
        Trig::NegSin => Trig::Cos,
    }
}

/// `⟨(e_i·∇)e_k, e_j⟩₀` in closed form, for arbitrary (not necessarily
/// canonical) modes.
pub fn triad_integral(i: BasisMode, k: BasisMode, j: BasisMode) -> f64 {
    // (e_i·∇)e_k = T_i · (w_i·k_k) T_k' · w_k
    let (wk, wj) = (k.direction(), j.direction());
    let kk = k.index;
    // w_i·k_k from an integer cross product, so that b_{ikj} = −b_{ijk} holds
    // bit for bit
    let slope = if i.is_constant() {
        let wi = i.direction();
        wi[0] * kk.k1 as f64 + wi[1] * kk.k2 as f64
    } else {
        let ki = i.index;
        (ki.k2 as i64 * kk.k1 as i64 - ki.k1 as i64 * kk.k2 as i64) as f64 / ki.norm()
    };
    let align = wk[0] * wj[0] + wk[1] * wj[1];
    if slope == 0.0 || align == 0.0 || k.is_constant() {
        return 0.0;
    }
    let dk = derivative_profile(k.trig());
    slope * align * trig_triple((i.trig(), i.index), (dk, kk), (j.trig(), j.index))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorEntry {
    pub i: u32,
    pub k: u32,
    pub j: u32,
    pub value: f64,
}

/// Nonzero `b_{ikj}` over the canonical modes of a truncation, sorted by
/// `(i, k, j)`.
#[derive(Clone, Debug)]
pub struct AdvectionTensor {
    trunc: TruncationSet,
    entries: Vec<TensorEntry>,
}

impl AdvectionTensor {
    pub fn build(trunc: TruncationSet) -> Self {
        let modes: Vec<BasisMode> = trunc.modes().collect();
        let mut entries = Vec::new();
        let mut targets: Vec<usize> = Vec::with_capacity(8);
        for (ii, &mi) in modes.iter().enumerate() {
            for (kk, &mk) in modes.iter().enumerate() {
                if mk.is_constant() {
                    continue;
                }
                targets.clear();
                for q in [mi.index + mk.index, mi.index - mk.index] {
                    if !trunc.contains(q) {
                        continue;
                    }
                    let (q, _) = q.canonical();
                    for j in [BasisMode::new(crate::basis::ModeKind::C, q), BasisMode::new(crate::basis::ModeKind::S, q)] {
                        let (jj, _) = trunc.index_of(j).expect("inside the truncation");
                        if !targets.contains(&jj) {
                            targets.push(jj);
                        }
                    }
                }
                targets.sort_unstable();
                for &jj in &targets {
                    let value = triad_integral(mi, mk, modes[jj]);
                    if value.abs() > 1e-13 {
                        entries.push(TensorEntry { i: ii as u32, k: kk as u32, j: jj as u32, value });
                    }
                }
            }
        }
        Self { trunc, entries }
    }

    pub fn trunc(&self) -> TruncationSet {
        self.trunc
    }

    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }

    pub fn get(&self, i: usize, k: usize, j: usize) -> f64 {
        let key = (i as u32, k as u32, j as u32);
        self.entries
            .binary_search_by(|e| (e.i, e.k, e.j).cmp(&key))
            .map_or(0.0, |p| self.entries[p].value)
    }
}

/// `ℬ(f)` from the tensor: `f_j = Σ_{i,k} b_{ikj} f_i f_k / ‖e_j‖²`.
pub fn nonlinear_direct(f: &SpectralField, tensor: &AdvectionTensor) -> Result<SpectralField> {
    if f.trunc() != tensor.trunc() {
        return Err(Error::TruncationMismatch { expected: tensor.trunc().n(), found: f.trunc().n() });
    }
    let c = f.coeffs();
    let mut out = SpectralField::zeros(f.trunc());
    {
        let o = out.coeffs_mut();
        for e in tensor.entries() {
            o[e.j as usize] += e.value * c[e.i as usize] * c[e.k as usize];
        }
    }
    normalize(&mut out);
    Ok(out)
}

fn normalize(f: &mut SpectralField) {
    let trunc = f.trunc();
    for (i, c) in f.coeffs_mut().iter_mut().enumerate() {
        *c /= trunc.mode_at(i).norm_sq();
    }
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    pos: usize,
    neg: usize,
    dir: Complex64,
    k: [f64; 2],
}

/// Scratch space for grid evaluation of `P_n[(a·∇)f]`.
///
/// Grid values are stored packed, `u¹ + i u²` per node. The product is formed
/// in divergence form `(a·∇)f = Σ_l ∂_l(a^l f)`, valid because `a` is
/// divergence-free, which needs one inverse transform per field and two
/// forward transforms. The grid holds `M ≥ deg(a) + 2n + 1` points per side,
/// so every wavevector of `I_n²` is free of aliasing; for `a = f` this is
/// the usual 3/2 rule.
#[derive(Clone, Debug)]
pub struct SpectralOps {
    trunc: TruncationSet,
    adv_degree: usize,
    m: usize,
    fft: Fft2,
    slots: Vec<Slot>,
    adv: Vec<Complex64>,
    field: Vec<Complex64>,
    p1: Vec<Complex64>,
    p2: Vec<Complex64>,
}

impl SpectralOps {
    /// Workspace for fields over `trunc` advected by fields of degree up to
    /// `max(adv_degree, n)`.
    pub fn new(trunc: TruncationSet, adv_degree: usize) -> Result<Self> {
        let n = trunc.n();
        let adv_degree = adv_degree.max(n);
        let m = grid_size(trunc.min_grid().max(adv_degree + 2 * n + 1));
        let zero = Complex64::new(0.0, 0.0);
        let slots = trunc
            .canonical_wavevectors()
            .map(|k| {
                let w = k.perp_unit();
                Slot {
                    pos: bin(k.k1, m) * m + bin(k.k2, m),
                    neg: bin(-k.k1, m) * m + bin(-k.k2, m),
                    dir: Complex64::new(w[0], w[1]),
                    k: [k.k1 as f64, k.k2 as f64],
                }
            })
            .collect();
        Ok(Self {
            trunc,
            adv_degree,
            m,
            fft: Fft2::new(m)?,
            slots,
            adv: vec![zero; m * m],
            field: vec![zero; m * m],
            p1: vec![zero; m * m],
            p2: vec![zero; m * m],
        })
    }

    pub fn trunc(&self) -> TruncationSet {
        self.trunc
    }

    pub fn grid(&self) -> usize {
        self.m
    }

    pub fn adv_degree(&self) -> usize {
        self.adv_degree
    }

    /// A zeroed buffer for packed grid values.
    pub fn grid_buffer(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.m * self.m]
    }

    /// Packed grid values of `f`, whose degree may be up to the advector degree.
    pub fn synthesize_into(&mut self, f: &SpectralField, grid: &mut [Complex64]) {
        let m = self.m;
        if f.trunc() == self.trunc {
            grid.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            let c = f.coeffs();
            grid[0] = Complex64::new(c[0], c[1]);
            for (p, slot) in self.slots.iter().enumerate() {
                let (a, b) = (c[2 + 2 * p], c[3 + 2 * p]);
                let h = Complex64::new(0.5 * a, -0.5 * b);
                grid[slot.pos] += slot.dir * h;
                grid[slot.neg] += slot.dir * h.conj();
            }
        } else {
            assert!(f.trunc().n() <= self.adv_degree, "field degree exceeds the workspace");
            scatter_packed(f, m, grid);
        }
        self.fft.inverse_banded(grid, f.trunc().n());
    }

    /// `out = P_n[(a·∇)f]` from packed grid values of `a` and `f`.
    pub fn advect_grids(&mut self, a: &[Complex64], f: &[Complex64], out: &mut SpectralField) {
        assert_eq!(out.trunc(), self.trunc, "output over the wrong truncation");
        let n = self.trunc.n();
        for (((p1, p2), a), f) in self.p1.iter_mut().zip(self.p2.iter_mut()).zip(a).zip(f) {
            *p1 = f * a.re;
            *p2 = f * a.im;
        }
        self.fft.forward_banded(&mut self.p1, n);
        self.fft.forward_banded(&mut self.p2, n);
        let scale = 1.0 / (self.m * self.m) as f64;
        let o = out.coeffs_mut();
        o[0] = 0.0;
        o[1] = 0.0;
        for (p, slot) in self.slots.iter().enumerate() {
            let [k1, k2] = slot.k;
            // packed spectrum of Σ_l ∂_l(a^l f) at ±k
            let zk = (self.p1[slot.pos] * k1 + self.p2[slot.pos] * k2) * Complex64::new(0.0, scale);
            let zm = (self.p1[slot.neg] * k1 + self.p2[slot.neg] * k2) * Complex64::new(0.0, -scale);
            let u1 = (zk + zm.conj()) * 0.5;
            let u2 = (zk - zm.conj()) * Complex64::new(0.0, -0.5);
            let s = u1 * slot.dir.re + u2 * slot.dir.im;
            o[2 + 2 * p] = 2.0 * s.re;
            o[3 + 2 * p] = -2.0 * s.im;
        }
    }

    /// `out = P_n[((Σ_t c_t a_t)·∇) f]`.
    pub fn advect(&mut self, terms: &[(f64, &SpectralField)], f: &SpectralField, out: &mut SpectralField) {
        assert_eq!(f.trunc(), self.trunc, "advected field over the wrong truncation");
        let mut adv = core::mem::take(&mut self.adv);
        let mut field = core::mem::take(&mut self.field);
        let m = self.m;
        adv.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        let mut band = 0;
        for &(c, a) in terms {
            assert!(a.trunc().n() <= self.adv_degree, "advector degree exceeds the workspace");
            band = band.max(a.trunc().n());
            add_packed(a, m, c, &mut adv);
        }
        self.fft.inverse_banded(&mut adv, band);
        self.synthesize_into(f, &mut field);
        self.advect_grids(&adv, &field, out);
        self.adv = adv;
        self.field = field;
    }

    /// `out = ℬ(f)`.
    pub fn nonlinear(&mut self, f: &SpectralField, out: &mut SpectralField) {
        let mut field = core::mem::take(&mut self.field);
        self.synthesize_into(f, &mut field);
        self.advect_grids(&field, &field, out);
        self.field = field;
    }
}

/// `ℬ(f)` on a dealiased grid.
pub fn nonlinear_pseudospectral(f: &SpectralField) -> Result<SpectralField> {
    let mut ops = SpectralOps::new(f.trunc(), f.trunc().n())?;
    let mut out = SpectralField::zeros(f.trunc());
    ops.nonlinear(f, &mut out);
    Ok(out)
}

/// Field along which a transport term advects.
#[derive(Clone, Copy, Debug)]
pub enum Advector<'a> {
    /// Constant vector `(a¹, a²)`; `(1, 0)` gives `∂₁`.
    Constant([f64; 2]),
    Mode(BasisMode),
    Field(&'a SpectralField),
}

/// `P_n[(a·∇)f]`. Content pushed outside `I_n²` by a space-dependent advector
/// is discarded; no Leray projection is involved beyond the restriction to
/// the divergence-free modes.
pub fn transport_apply(f: &SpectralField, advector: Advector<'_>) -> SpectralField {
    match advector {
        Advector::Constant(a) => {
            let mut out = derivative(f, 0);
            out.scale(a[0]);
            out.axpy(a[1], &derivative(f, 1));
            out
        }
        Advector::Mode(mode) => {
            let a = SpectralField::single(TruncationSet::new(mode.index.max_abs()), mode, 1.0);
            transport_apply(f, Advector::Field(&a))
        }
        Advector::Field(a) => {
            let mut ops = SpectralOps::new(f.trunc(), a.trunc().n()).expect("grid sized from the truncation");
            let mut out = SpectralField::zeros(f.trunc());
            ops.advect(&[(1.0, a)], f, &mut out);
            out
        }
    }
}

/// Reference form of [`transport_apply`] for a single advecting mode, from the
/// closed-form triad integrals.
pub fn transport_direct(f: &SpectralField, advector: BasisMode) -> SpectralField {
    let trunc = f.trunc();
    let mut out = SpectralField::zeros(trunc);
    let modes: Vec<BasisMode> = trunc.modes().collect();
    for (k, &mk) in modes.iter().enumerate() {
        let c = f.coeffs()[k];
        if c == 0.0 {
            continue;
        }
        for (j, &mj) in modes.iter().enumerate() {
            out.coeffs_mut()[j] += c * triad_integral(advector, mk, mj);
        }
    }
    normalize(&mut out);
    out
}

/// Drift of the Itô form: `−½𝒜f − ℬ(f)`.
pub fn ito_drift(f: &SpectralField) -> Result<SpectralField> {
    let mut out = nonlinear_pseudospectral(f)?;
    out.scale(-1.0);
    out.axpy(-VISCOSITY, &stokes_apply(f));
    Ok(out)
}

/// Drift of the Stratonovich form: `−ℬ(f)`.
pub fn strat_drift(f: &SpectralField) -> Result<SpectralField> {
    let mut out = nonlinear_pseudospectral(f)?;
    out.scale(-1.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{gradient, synthesize, GridField};
    use proptest::prelude::*;

    fn random_field(trunc: TruncationSet, seed: u64) -> SpectralField {
        // small LCG keeps these unit tests free of extra dependencies
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let coeffs = (0..trunc.num_modes())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect();
        SpectralField::from_coeffs(trunc, coeffs).unwrap()
    }

    /// Trapezoid quadrature of `⟨(a·∇)b, e_j⟩₀ / ‖e_j‖²` for every mode.
    fn quadrature_advect(a: &SpectralField, b: &SpectralField, m: usize) -> SpectralField {
        let ga = synthesize(&a.restrict(TruncationSet::new(a.trunc().n())), m).unwrap();
        let [d1, d2] = gradient(b);
        let (g1, g2) = (synthesize(&d1, m).unwrap(), synthesize(&d2, m).unwrap());
        let prod: Vec<[f64; 2]> = (0..m * m)
            .map(|i| {
                let (av, x, y) = (ga.values()[i], g1.values()[i], g2.values()[i]);
                [av[0] * x[0] + av[1] * y[0], av[0] * x[1] + av[1] * y[1]]
            })
            .collect();
        let g = GridField::from_values(m, prod).unwrap();
        let trunc = b.trunc();
        let mut out = SpectralField::zeros(trunc);
        for (i, mode) in trunc.modes().enumerate() {
            let e = GridField::from_fn(m, |th| crate::basis::eval_mode(mode, th));
            out.coeffs_mut()[i] = g.inner(&e) / mode.norm_sq();
        }
        out
    }

    #[test]
    fn stokes_examples() {
        let t = TruncationSet::new(2);
        assert_eq!(stokes_apply(&SpectralField::single(t, BasisMode::c(0, 0), 1.0)).max_abs(), 0.0);
        let f = SpectralField::single(t, BasisMode::c(1, 0), 1.0);
        assert_eq!(stokes_apply(&f), f);
        let f = SpectralField::single(t, BasisMode::c(1, 1), 2.0);
        assert_eq!(stokes_apply(&f), SpectralField::single(t, BasisMode::c(1, 1), 4.0));
    }

    #[test]
    fn tensor_matches_quadrature() {
        let t = TruncationSet::new(2);
        let modes: Vec<BasisMode> = t.modes().collect();
        let m = 16;
        for &mi in &modes {
            for &mk in &modes {
                let adv = quadrature_advect(
                    &SpectralField::single(t, mi, 1.0),
                    &SpectralField::single(t, mk, 1.0),
                    m,
                );
                for (jj, &mj) in modes.iter().enumerate() {
                    let q = adv.coeffs()[jj] * mj.norm_sq();
                    let b = triad_integral(mi, mk, mj);
                    assert!((q - b).abs() < 1e-12, "{mi:?} {mk:?} {mj:?}: {q} vs {b}");
                }
            }
        }
    }

    #[test]
    fn tensor_is_skew_in_last_slots() {
        let t = TruncationSet::new(3);
        let tensor = AdvectionTensor::build(t);
        for e in tensor.entries() {
            let swapped = tensor.get(e.i as usize, e.j as usize, e.k as usize);
            assert_eq!(e.value, -swapped);
        }
    }

    #[test]
    fn single_modes_are_steady() {
        let t = TruncationSet::new(3);
        let tensor = AdvectionTensor::build(t);
        for mode in t.modes() {
            let f = SpectralField::single(t, mode, 1.7);
            assert!(nonlinear_direct(&f, &tensor).unwrap().max_abs() < 1e-15);
            assert!(nonlinear_pseudospectral(&f).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn perpendicular_pair_is_steady() {
        // C(1,0) + C(0,1) has equal |k| and is an exact Euler steady state
        let t = TruncationSet::new(2);
        let f = SpectralField::from_modes(t, &[(BasisMode::c(1, 0), 1.0), (BasisMode::c(0, 1), 1.0)]).unwrap();
        let q = quadrature_advect(&f, &f, 16);
        let b = nonlinear_direct(&f, &AdvectionTensor::build(t)).unwrap();
        assert!(b.max_abs_diff(&q) < 1e-12);
        assert!(b.max_abs() < 1e-12);
    }

    #[test]
    fn interacting_pair_support() {
        let t = TruncationSet::new(2);
        let f = SpectralField::from_modes(t, &[(BasisMode::c(1, 0), 1.0), (BasisMode::c(1, 1), 1.0)]).unwrap();
        let b = nonlinear_direct(&f, &AdvectionTensor::build(t)).unwrap();
        let q = quadrature_advect(&f, &f, 16);
        assert!(b.max_abs_diff(&q) < 1e-12);
        assert!(b.max_abs() > 0.1);
        for (mode, c) in b.support() {
            if c.abs() > 1e-12 {
                assert!([ModeIndex::new(2, 1), ModeIndex::new(0, 1)].contains(&mode.index), "{mode:?}");
            }
        }
    }

    #[test]
    fn pseudospectral_matches_direct() {
        for n in [1, 2, 4, 6] {
            let t = TruncationSet::new(n);
            let tensor = AdvectionTensor::build(t);
            for seed in 0..5 {
                let f = random_field(t, seed);
                let d = nonlinear_direct(&f, &tensor).unwrap();
                let p = nonlinear_pseudospectral(&f).unwrap();
                assert!(d.max_abs_diff(&p) < 1e-10, "n = {n}: {}", d.max_abs_diff(&p));
            }
        }
    }

    #[test]
    fn transport_examples() {
        let t = TruncationSet::new(2);
        let f = SpectralField::single(t, BasisMode::c(1, 0), 1.0);
        assert_eq!(transport_apply(&f, Advector::Constant([1.0, 0.0])), SpectralField::single(t, BasisMode::s(1, 0), -1.0));
        assert_eq!(transport_apply(&f, Advector::Constant([0.0, 1.0])).max_abs(), 0.0);

        let g = SpectralField::single(t, BasisMode::c(0, 1), 1.0);
        let out = transport_apply(&g, Advector::Mode(BasisMode::c(1, 0)));
        let a = SpectralField::single(t, BasisMode::c(1, 0), 1.0);
        assert!(out.max_abs_diff(&quadrature_advect(&a, &g, 16)) < 1e-12);
        assert!(out.max_abs() > 0.1);
        for (mode, c) in out.support() {
            if c.abs() > 1e-12 {
                assert!([ModeIndex::new(1, 1), ModeIndex::new(1, -1)].contains(&mode.index), "{mode:?}");
            }
        }
    }

    #[test]
    fn transport_grid_matches_direct() {
        let t = TruncationSet::new(3);
        let f = random_field(t, 9);
        for adv in [BasisMode::c(0, 0), BasisMode::s(0, 0), BasisMode::c(1, 2), BasisMode::s(-2, 1), BasisMode::c(3, 3)] {
            let g = transport_apply(&f, Advector::Mode(adv));
            let d = transport_direct(&f, adv);
            assert!(g.max_abs_diff(&d) < 1e-12, "{adv:?}");
        }
    }

    #[test]
    fn drift_examples() {
        let t = TruncationSet::new(2);
        let f = SpectralField::single(t, BasisMode::c(1, 0), 1.0);
        assert!(strat_drift(&f).unwrap().max_abs() < 1e-12);
        let ito = ito_drift(&f).unwrap();
        assert!(ito.max_abs_diff(&SpectralField::single(t, BasisMode::c(1, 0), -0.5)) < 1e-12);
        let z = SpectralField::zeros(t);
        assert_eq!(ito_drift(&z).unwrap().max_abs(), 0.0);
        assert_eq!(strat_drift(&z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn truncation_mismatch_is_reported() {
        let tensor = AdvectionTensor::build(TruncationSet::new(2));
        let f = SpectralField::zeros(TruncationSet::new(3));
        assert_eq!(
            nonlinear_direct(&f, &tensor).unwrap_err(),
            Error::TruncationMismatch { expected: 2, found: 3 }
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn energy_and_enstrophy_orthogonality(seed in any::<u64>()) {
            let t = TruncationSet::new(5);
            let f = random_field(t, seed);
            let b = nonlinear_pseudospectral(&f).unwrap();
            let scale = f.l2_norm_sq();
            prop_assert!(b.inner(&f).abs() <= 1e-10 * scale);
            prop_assert!(b.h1_inner(&f).abs() <= 1e-10 * f.h1_norm_sq() * 25.0);
            let itod = ito_drift(&f).unwrap();
            let mut shifted = itod.clone();
            shifted.axpy(VISCOSITY, &stokes_apply(&f));
            prop_assert!(shifted.inner(&f).abs() <= 1e-10 * scale);
        }

        #[test]
        fn transport_is_skew(seed in any::<u64>(), k1 in -3i32..=3, k2 in -3i32..=3, s in any::<bool>()) {
            let t = TruncationSet::new(4);
            let f = random_field(t, seed);
            let mode = if s { BasisMode::s(k1, k2) } else { BasisMode::c(k1, k2) };
            let out = transport_apply(&f, Advector::Mode(mode));
            let tol = 1e-10 * libm::sqrt(f.l2_norm_sq() * f.h1_norm_sq()).max(1.0);
            prop_assert!(out.inner(&f).abs() <= tol);
        }
    }
}
