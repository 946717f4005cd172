//! Energy ledgers and the martingale-problem functionals.
//!
//! For a test field `v` the Itô form gives
//!
//! ```text
//! d⟨u, v⟩ = −⟨½𝒜u + ℬu, v⟩ dt + Σ_e σ_e ⟨T_e u, v⟩ dB_e
//! ```
//!
//! with `T_e = (a_e·∇)`, so that
//!
//! ```text
//! φ^v(u) = i⟨−½𝒜u − ℬu, v⟩ − ½ Σ_e σ_e² ⟨T_e u, v⟩²
//! L_t    = e^{i⟨u_t, v⟩} − ∫_0^t e^{i⟨u_s, v⟩} φ^v(u_s) ds
//! M_t    = ⟨u_t, v⟩ − ⟨u_0, v⟩ + ∫_0^t ⟨½𝒜u + ℬu, v⟩ ds
//! ```
//!
//! and `M_t² − ∫ Σ_e σ_e²⟨T_e u, v⟩² ds` should both be martingales. For
//! space-independent noise the sum over `e` is the sum over `∂₁, ∂₂`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::basis::{BasisMode, ModeKind, SpectralField, TruncationSet};
use crate::dynamics::triad_integral;
use crate::integrate::PathResult;
use crate::noise::NoiseModel;
use crate::stats::RunningStats;
use crate::{Error, Result};

/// The linear and quadratic forms `u ↦ ⟨·, v⟩` needed by `φ^v`, precomputed
/// as sparse coefficient lists.
#[derive(Clone, Debug)]
pub struct ProbeForms {
    v: SpectralField,
    /// `⟨ℬu, v⟩ = Σ q · u_i u_k`
    quad: Vec<(u32, u32, f64)>,
    /// `σ_e ⟨T_e u, v⟩ = Σ c · u_k`, one list per noise entry
    noise: Vec<Vec<(u32, f64)>>,
}

impl ProbeForms {
    pub fn new(v: &SpectralField, model: &NoiseModel) -> Self {
        let trunc = v.trunc();
        let support: Vec<(BasisMode, f64)> = v.support().collect();

        let mut quad: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for &(mj, vj) in &support {
            for (ii, mi) in trunc.modes().enumerate() {
                for kk in partners(trunc, mi, mj) {
                    let mk = trunc.mode_at(kk);
                    let b = triad_integral(mi, mk, mj);
                    if b != 0.0 {
                        *quad.entry((ii as u32, kk as u32)).or_insert(0.0) += b * vj;
                    }
                }
            }
        }

        let noise = model
            .entries()
            .iter()
            .map(|e| {
                let mut lin: BTreeMap<u32, f64> = BTreeMap::new();
                for &(mj, vj) in &support {
                    for kk in partners(trunc, e.advector, mj) {
                        let b = triad_integral(e.advector, trunc.mode_at(kk), mj);
                        if b != 0.0 {
                            *lin.entry(kk as u32).or_insert(0.0) += e.coeff * b * vj;
                        }
                    }
                }
                lin.into_iter().filter(|&(_, c)| c != 0.0).collect()
            })
            .collect();

        Self {
            v: v.clone(),
            quad: quad.into_iter().filter(|&(_, q)| q != 0.0).map(|((i, k), q)| (i, k, q)).collect(),
            noise,
        }
    }

    pub fn v(&self) -> &SpectralField {
        &self.v
    }

    /// `⟨u, v⟩₀`
    pub fn inner(&self, u: &SpectralField) -> f64 {
        u.inner(&self.v)
    }

    /// `⟨½𝒜u, v⟩ = ½⟨u, v⟩₁`
    pub fn stokes(&self, u: &SpectralField) -> f64 {
        0.5 * u.h1_inner(&self.v)
    }

    /// `⟨ℬu, v⟩`
    pub fn advection(&self, u: &SpectralField) -> f64 {
        let c = u.coeffs();
        self.quad.iter().map(|&(i, k, q)| q * c[i as usize] * c[k as usize]).sum()
    }

    /// `⟨½𝒜u + ℬu, v⟩`, minus the drift of `⟨u, v⟩`.
    pub fn drift(&self, u: &SpectralField) -> f64 {
        self.stokes(u) + self.advection(u)
    }

    /// `σ_e ⟨T_e u, v⟩` for every noise entry.
    pub fn noise_rates<'a>(&'a self, u: &'a SpectralField) -> impl Iterator<Item = f64> + 'a {
        let c = u.coeffs();
        self.noise.iter().map(move |lin| lin.iter().map(|&(k, a)| a * c[k as usize]).sum())
    }

    /// `Σ_e σ_e² ⟨T_e u, v⟩²`
    pub fn qv_rate(&self, u: &SpectralField) -> f64 {
        self.noise_rates(u).map(|r| r * r).sum()
    }

    pub fn phi(&self, u: &SpectralField) -> Complex64 {
        Complex64::new(-0.5 * self.qv_rate(u), -self.drift(u))
    }
}

/// Storage indices `k` for which `b_{i k j}` can be nonzero.
fn partners(trunc: TruncationSet, mi: BasisMode, mj: BasisMode) -> Vec<usize> {
    let mut out = Vec::with_capacity(4);
    for q in [mj.index + mi.index, mj.index - mi.index] {
        if q.is_zero() || !trunc.contains(q) {
            continue;
        }
        for kind in [ModeKind::C, ModeKind::S] {
            if let Some((idx, _)) = trunc.index_of(BasisMode::new(kind, q)) {
                if !out.contains(&idx) {
                    out.push(idx);
                }
            }
        }
    }
    out
}

/// `φ^v(u)` for space-independent noise.
pub fn phi_v(u: &SpectralField, v: &SpectralField) -> Complex64 {
    ProbeForms::new(v, &NoiseModel::space_independent()).phi(&u.restrict(v.trunc()))
}

/// Test field whose pairing with `u` returns the coefficient of `mode`:
/// `mode / ‖mode‖²`.
pub fn coefficient_probe(trunc: TruncationSet, mode: BasisMode) -> SpectralField {
    SpectralField::single(trunc, mode, 1.0 / mode.norm_sq())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MartingaleSample {
    pub t: f64,
    /// `⟨u_t, v⟩₀`
    pub inner: f64,
    pub phi: Complex64,
    /// `L_t`
    pub l: Complex64,
    /// `M_t`
    pub m: f64,
    /// `∫_0^t Σ_e σ_e²⟨T_e u, v⟩² ds`
    pub qv: f64,
}

/// Online evaluation of `L_t`, `M_t` and the bracket along one path, with
/// trapezoid quadrature over the pushed times.
#[derive(Clone, Debug)]
pub struct MartingaleProbe {
    forms: ProbeForms,
    last: Option<Running>,
}

#[derive(Clone, Copy, Debug)]
struct Running {
    t: f64,
    inner0: f64,
    weighted_phi: Complex64,
    drift: f64,
    qv_rate: f64,
    int_phi: Complex64,
    int_drift: f64,
    int_qv: f64,
}

impl MartingaleProbe {
    pub fn new(forms: ProbeForms) -> Self {
        Self { forms, last: None }
    }

    pub fn forms(&self) -> &ProbeForms {
        &self.forms
    }

    pub fn push(&mut self, t: f64, u: &SpectralField) -> MartingaleSample {
        let inner = self.forms.inner(u);
        let phi = self.forms.phi(u);
        let e = Complex64::new(0.0, inner).exp();
        let weighted_phi = e * phi;
        let drift = self.forms.drift(u);
        let qv_rate = self.forms.qv_rate(u);
        let run = match self.last {
            None => Running {
                t,
                inner0: inner,
                weighted_phi,
                drift,
                qv_rate,
                int_phi: Complex64::new(0.0, 0.0),
                int_drift: 0.0,
                int_qv: 0.0,
            },
            Some(p) => {
                let h = 0.5 * (t - p.t);
                Running {
                    t,
                    inner0: p.inner0,
                    weighted_phi,
                    drift,
                    qv_rate,
                    int_phi: p.int_phi + (p.weighted_phi + weighted_phi) * h,
                    int_drift: p.int_drift + (p.drift + drift) * h,
                    int_qv: p.int_qv + (p.qv_rate + qv_rate) * h,
                }
            }
        };
        self.last = Some(run);
        MartingaleSample {
            t,
            inner,
            phi,
            l: e - run.int_phi,
            m: inner - run.inner0 + run.int_drift,
            qv: run.int_qv,
        }
    }
}

/// `L_t` at every step of a path saved at full resolution.
pub fn martingale_l_series(path: &PathResult, v: &SpectralField, model: &NoiseModel) -> Result<Vec<Complex64>> {
    if path.save_every != 1 {
        return Err(Error::InsufficientSaveResolution(path.save_every));
    }
    let mut probe = MartingaleProbe::new(ProbeForms::new(v, model));
    Ok(path.times.iter().zip(&path.states).map(|(&t, u)| probe.push(t, u).l).collect())
}

/// Per-time comparison of `E[M_t]` with zero and of `E[M_t²]` with the mean
/// bracket.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QvRow {
    pub t: f64,
    pub mean_m: f64,
    pub se_m: f64,
    pub mean_m2: f64,
    pub mean_qv: f64,
    /// `mean(M²) − mean(bracket)`
    pub gap: f64,
    /// Standard error of the paired differences `M² − bracket`.
    pub se_gap: f64,
}

pub const QV_MIN_PATHS: usize = 64;

/// Aggregates per-path sample series taken at common times.
pub fn qv_check(paths: &[Vec<MartingaleSample>]) -> Result<Vec<QvRow>> {
    if paths.len() < QV_MIN_PATHS {
        return Err(Error::TooFewPaths { needed: QV_MIN_PATHS, got: paths.len() });
    }
    let len = paths[0].len();
    if let Some(bad) = paths.iter().find(|p| p.len() != len) {
        return Err(Error::DimensionMismatch { expected: len, found: bad.len() });
    }
    Ok((0..len)
        .map(|i| {
            let (mut m, mut m2, mut qv, mut d) =
                (RunningStats::default(), RunningStats::default(), RunningStats::default(), RunningStats::default());
            for p in paths {
                let s = p[i];
                m.push(s.m);
                m2.push(s.m * s.m);
                qv.push(s.qv);
                d.push(s.m * s.m - s.qv);
            }
            QvRow {
                t: paths[0][i].t,
                mean_m: m.mean(),
                se_m: m.std_err(),
                mean_m2: m2.mean(),
                mean_qv: qv.mean(),
                gap: d.mean(),
                se_gap: d.std_err(),
            }
        })
        .collect())
}

/// Norm history of one path together with the `H¹` envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
    /// `max_t |‖u_t‖₀² − ‖u_0‖₀²| / ‖u_0‖₀²`, zero for a zero initial field.
    pub max_l2_drift: f64,
    /// `‖∇u_0‖₀² e^{Ct}`
    pub envelope_h1: Vec<f64>,
}

/// `‖u_0‖₁² e^{Ct}`
pub fn h1_envelope(h1_0: f64, growth_rate: f64, t: f64) -> f64 {
    h1_0 * libm::exp(growth_rate * t)
}

pub fn relative_drift(series: &[f64]) -> f64 {
    let Some(&x0) = series.first() else { return 0.0 };
    let worst = series.iter().fold(0.0f64, |m, x| m.max((x - x0).abs()));
    if x0 == 0.0 {
        worst
    } else {
        worst / x0
    }
}

pub fn energy_report(path: &PathResult, growth_rate: f64) -> EnergyLedger {
    let h1_0 = path.h1.first().copied().unwrap_or(0.0);
    EnergyLedger {
        times: path.step_times(),
        l2: path.l2.clone(),
        h1: path.h1.clone(),
        max_l2_drift: relative_drift(&path.l2),
        envelope_h1: path.step_times().iter().map(|&t| h1_envelope(h1_0, growth_rate, t)).collect(),
    }
}
