//! Transport noise on the torus.
//!
//! The Wiener field is
//!
//! ```text
//! W(t, θ) = c_W^{-1/2} Σ_k q_k^{1/2} [𝔠_k(θ) B_k¹(t) + 𝔰_k(θ) B_k²(t)]
//! ```
//!
//! with `q_0 = 1`, `q_k = |k|^{−2(β−1)}` and independent Brownian motions for
//! every `k`, including `k` and `−k` separately. With that normalization the
//! Stratonovich correction of `Σ_l ∂_l u ∘ dW^l` is exactly `½Δu`.
//!
//! A model is flattened into a list of [`NoiseEntry`]s, one per scalar Brownian
//! motion, each pairing a coefficient with the basis field it advects along.

use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::{BasisMode, ModeIndex, ModeKind, SpectralField, TruncationSet};
use crate::{Error, Result};

/// Default lattice cutoff for `c_W` and `c′_W`.
pub const DEFAULT_CUTOFF: usize = 2048;

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseRegime {
    /// `W(t) = (B¹(t), B²(t))`, constant in space.
    SpaceIndependent,
    /// The Wiener field restricted to the listed wavevectors.
    FiniteModes(Vec<ModeIndex>),
    /// The Wiener field restricted to `I_{n_W}²`.
    QWiener { n_w: usize },
}

/// One scalar Brownian motion: the transport field `coeff · advector`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseEntry {
    pub coeff: f64,
    pub advector: BasisMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    regime: NoiseRegime,
    beta: f64,
    cw: f64,
    cw_prime: f64,
    entries: Vec<NoiseEntry>,
}

impl NoiseModel {
    /// Space-independent noise. `c_W = 1` and `c′_W = 0`.
    pub fn space_independent() -> Self {
        Self {
            regime: NoiseRegime::SpaceIndependent,
            beta: f64::INFINITY,
            cw: 1.0,
            cw_prime: 0.0,
            entries: constant_entries(1.0),
        }
    }

    /// No noise at all; the deterministic Euler flow.
    pub fn zero() -> Self {
        Self {
            regime: NoiseRegime::FiniteModes(Vec::new()),
            beta: f64::INFINITY,
            cw: 1.0,
            cw_prime: 0.0,
            entries: Vec::new(),
        }
    }

    pub fn q_wiener(n_w: usize, beta: f64) -> Result<Self> {
        let (cw, cw_prime) = normalizers(beta)?;
        let entries = TruncationSet::new(n_w)
            .lattice()
            .flat_map(|k| wavevector_entries(k, beta, cw))
            .collect();
        Ok(Self { regime: NoiseRegime::QWiener { n_w }, beta, cw, cw_prime, entries })
    }

    /// Finite-mode noise over `modes`; duplicates are dropped. `c_W` keeps its
    /// full-lattice value so the amplitudes match the truncated Q-Wiener field.
    pub fn finite_modes(modes: &[ModeIndex], beta: f64) -> Result<Self> {
        let (cw, cw_prime) = normalizers(beta)?;
        let mut uniq: Vec<ModeIndex> = Vec::with_capacity(modes.len());
        for &k in modes {
            if !uniq.contains(&k) {
                uniq.push(k);
            }
        }
        let entries = uniq.iter().flat_map(|&k| wavevector_entries(k, beta, cw)).collect();
        Ok(Self { regime: NoiseRegime::FiniteModes(uniq), beta, cw, cw_prime, entries })
    }

    pub fn regime(&self) -> &NoiseRegime {
        &self.regime
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cw(&self) -> f64 {
        self.cw
    }

    pub fn cw_prime(&self) -> f64 {
        self.cw_prime
    }

    /// Growth rate `C = c′_W / c_W` of the `H¹` bound.
    pub fn growth_rate(&self) -> f64 {
        self.cw_prime / self.cw
    }

    pub fn entries(&self) -> &[NoiseEntry] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest `max(|k¹|, |k²|)` among the advectors.
    pub fn degree(&self) -> usize {
        self.entries.iter().map(|e| e.advector.index.max_abs()).max().unwrap_or(0)
    }

    /// True when every advector is a constant field.
    pub fn is_space_independent(&self) -> bool {
        self.degree() == 0
    }
}

fn normalizers(beta: f64) -> Result<(f64, f64)> {
    let cw = normalizer_cw(beta, DEFAULT_CUTOFF)?.value();
    let cwp = normalizer_cw_prime(beta, DEFAULT_CUTOFF)?.value();
    Ok((cw, cwp))
}

fn constant_entries(coeff: f64) -> Vec<NoiseEntry> {
    alloc::vec![
        NoiseEntry { coeff, advector: BasisMode::c(0, 0) },
        NoiseEntry { coeff, advector: BasisMode::s(0, 0) },
    ]
}

fn wavevector_entries(k: ModeIndex, beta: f64, cw: f64) -> Vec<NoiseEntry> {
    let coeff = libm::sqrt(q_coeff_unchecked(k, beta) / cw);
    alloc::vec![
        NoiseEntry { coeff, advector: BasisMode::new(ModeKind::C, k) },
        NoiseEntry { coeff, advector: BasisMode::new(ModeKind::S, k) },
    ]
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_nan() || beta <= 3.0 {
        return Err(Error::InvalidBeta(beta));
    }
    Ok(())
}

/// Covariance eigenvalue `q_k`.
pub fn q_coeff(k: ModeIndex, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(q_coeff_unchecked(k, beta))
}

fn q_coeff_unchecked(k: ModeIndex, beta: f64) -> f64 {
    if k.is_zero() {
        1.0
    } else {
        libm::pow(k.norm_sq() as f64, 1.0 - beta)
    }
}

/// A lattice sum split into its computed part over `I_N²` and an estimate of
/// the remainder, with a bound on the error of that estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSum {
    pub cutoff: usize,
    pub partial: f64,
    pub tail_estimate: f64,
    pub error_bound: f64,
}

impl LatticeSum {
    pub fn value(&self) -> f64 {
        self.partial + self.tail_estimate
    }

    pub fn lower(&self) -> f64 {
        self.value() - self.error_bound
    }

    pub fn upper(&self) -> f64 {
        self.value() + self.error_bound
    }

    pub fn width(&self) -> f64 {
        2.0 * self.error_bound
    }
}

/// `c_W = 1 + Σ_{k≠0} (k¹)² / |k|^{2β}`.
pub fn normalizer_cw(beta: f64, cutoff: usize) -> Result<LatticeSum> {
    check_beta(beta)?;
    let mut s = weighted_sum(beta, cutoff, 0);
    s.partial += 1.0;
    Ok(s)
}

/// `c′_W = Σ_{k≠0} (k¹)² / |k|^{2β−2}`.
pub fn normalizer_cw_prime(beta: f64, cutoff: usize) -> Result<LatticeSum> {
    check_beta(beta)?;
    Ok(weighted_sum(beta - 1.0, cutoff, 0))
}

/// `Σ_{k ∈ I_N² \ 0} (k^axis)² / |k|^{2p}` with its tail.
///
/// The loops run over the weighted coordinate first, so both axes produce the
/// same floating point terms in the same order and agree bit for bit.
pub fn weighted_sum(p: f64, cutoff: usize, axis: usize) -> LatticeSum {
    let n = cutoff as i64;
    let mut acc = Neumaier::default();
    for w in 1..=n {
        for o in 0..=n {
            let k = if axis == 0 { (w, o) } else { (o, w) };
            let weighted = if axis == 0 { k.0 } else { k.1 };
            // (±w, 0) has two lattice images, (±w, ±o) four
            let mult = if o == 0 { 2.0 } else { 4.0 };
            let r2 = (k.0 * k.0 + k.1 * k.1) as f64;
            acc.add(mult * (weighted * weighted) as f64 * libm::pow(r2, -p));
        }
    }
    let a = n as f64 + 0.5;
    // the k¹² weight averages to half of |k|²
    let tail_estimate = 0.5 * outside_square_integral(2.0 * p - 2.0, a);
    // midpoint-rule error of the integral comparison, summed over the outside cells
    let k = 2.0 + 12.0 * p + 8.0 * p * (p + 1.0);
    let error_bound = k / 3.0 * libm::pow(n as f64, 2.0 - 2.0 * p) / (2.0 * p - 2.0);
    LatticeSum { cutoff, partial: acc.sum(), tail_estimate, error_bound }
}

/// Same sum enumerated over the full lattice with the weight on `k^axis`; the
/// direct oracle for [`weighted_sum`].
pub fn weighted_sum_direct(p: f64, cutoff: usize, axis: usize) -> f64 {
    let mut acc = Neumaier::default();
    for k in TruncationSet::new(cutoff).lattice() {
        if k.is_zero() {
            continue;
        }
        let w = k.component(axis) as f64;
        acc.add(w * w * libm::pow(k.norm_sq() as f64, -p));
    }
    acc.sum()
}

/// `∫_{ℝ² \ [−a, a]²} |x|^{−s} dx` for `s > 2`.
fn outside_square_integral(s: f64, a: f64) -> f64 {
    // polar coordinates: 8 ∫_0^{π/4} ∫_{a/cos φ}^∞ r^{1−s} dr dφ
    let f = |phi: f64| libm::pow(libm::cos(phi), s - 2.0);
    let steps = 256;
    let h = core::f64::consts::FRAC_PI_4 / steps as f64;
    let mut acc = f(0.0) + f(core::f64::consts::FRAC_PI_4);
    for i in 1..steps {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    let angular = acc * h / 3.0;
    8.0 * libm::pow(a, 2.0 - s) / (s - 2.0) * angular
}

/// `Σ_{k ∉ I_{n_W}²} q_k`, counting each wavevector once.
pub fn discarded_trace(n_w: usize, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let p = beta - 1.0;
    let mut total = Neumaier::default();
    let mut kept = Neumaier::default();
    let n = DEFAULT_CUTOFF.max(4 * n_w) as i64;
    for i in -n..=n {
        for j in -n..=n {
            if i == 0 && j == 0 {
                continue;
            }
            let q = libm::pow((i * i + j * j) as f64, -p);
            total.add(q);
            if i.unsigned_abs() as usize <= n_w && j.unsigned_abs() as usize <= n_w {
                kept.add(q);
            }
        }
    }
    let tail = outside_square_integral(2.0 * p, n as f64 + 0.5);
    Ok(total.sum() + tail - kept.sum())
}

#[derive(Clone, Copy, Debug, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Brownian increments over one step, aligned with [`NoiseModel::entries`].
#[derive(Clone, Debug, PartialEq)]
pub struct WienerIncrement {
    pub dt: f64,
    pub db: Vec<f64>,
}

impl WienerIncrement {
    pub fn zeros(dt: f64, len: usize) -> Self {
        Self { dt, db: alloc::vec![0.0; len] }
    }

    /// Sum of consecutive increments, i.e. the increment over the union of steps.
    pub fn merge(parts: &[WienerIncrement]) -> Self {
        let len = parts.first().map_or(0, |p| p.db.len());
        let mut out = Self::zeros(0.0, len);
        for p in parts {
            out.dt += p.dt;
            for (a, b) in out.db.iter_mut().zip(&p.db) {
                *a += b;
            }
        }
        out
    }
}

/// Draws one increment, consuming normals from `rng` in entry order.
pub fn sample_increments<R: RngCore + ?Sized>(model: &NoiseModel, dt: f64, rng: &mut R) -> WienerIncrement {
    let sd = libm::sqrt(dt.max(0.0));
    let db = model
        .entries()
        .iter()
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect();
    WienerIncrement { dt, db }
}

/// Counter-addressed random stream of one path: the increment of step `s` of
/// path `p` under seed `σ` depends on `(σ, p, s)` only.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    /// Stream id reserved for random initial conditions.
    pub const INITIAL_CONDITION: u64 = u64::MAX;

    pub fn new(seed: u64, path_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_id);
        Self { rng }
    }

    /// Positions the stream at the block reserved for `step`.
    pub fn seek(&mut self, step: u64) {
        self.rng.set_word_pos((step as u128) << 32);
    }

    pub fn increment(&mut self, model: &NoiseModel, dt: f64, step: u64) -> WienerIncrement {
        self.seek(step);
        sample_increments(model, dt, &mut self.rng)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// The transport fields of the model, one per scalar Brownian motion.
pub fn noise_field_increment(model: &NoiseModel) -> &[NoiseEntry] {
    model.entries()
}

/// `ΔW = Σ_e coeff_e ΔB_e · advector_e` as a field over `trunc`.
pub fn advector_increment(model: &NoiseModel, dw: &WienerIncrement, trunc: TruncationSet) -> SpectralField {
    let mut f = SpectralField::zeros(trunc);
    for (e, db) in model.entries().iter().zip(&dw.db) {
        f.add_to(e.advector, e.coeff * db);
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn q_examples() {
        assert_eq!(q_coeff(ModeIndex::ZERO, 4.0).unwrap(), 1.0);
        assert_eq!(q_coeff(ModeIndex::new(1, 0), 4.0).unwrap(), 1.0);
        assert_abs_diff_eq!(q_coeff(ModeIndex::new(1, 1), 4.0).unwrap(), 0.125, epsilon = 1e-15);
        assert_eq!(q_coeff(ModeIndex::new(1, 1), 3.0).unwrap_err(), Error::InvalidBeta(3.0));
        assert!(q_coeff(ModeIndex::new(1, 1), 2.5).is_err());
    }

    #[test]
    fn cw_small_cutoff() {
        assert_abs_diff_eq!(normalizer_cw(4.0, 1).unwrap().partial, 3.25, epsilon = 1e-15);
        // (±1,0): 1 each; (±1,±1): 1/8 each
        assert_abs_diff_eq!(normalizer_cw_prime(4.0, 1).unwrap().partial, 2.5, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_weights_agree() {
        for n in [1, 2, 5, 17, 64] {
            let a = weighted_sum_direct(4.0, n, 0);
            let b = weighted_sum_direct(4.0, n, 1);
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
            assert_abs_diff_eq!(weighted_sum(4.0, n, 0).partial, a, epsilon = 1e-14);
            assert_eq!(weighted_sum(4.0, n, 0).partial, weighted_sum(4.0, n, 1).partial);
        }
    }

    #[test]
    fn partial_sums_increase() {
        let mut prev = 0.0;
        for n in 1..20 {
            let s = normalizer_cw_prime(4.0, n).unwrap().partial;
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn tail_estimate_tracks_true_remainder() {
        let big = weighted_sum(3.0, 1024, 0).value();
        for n in [16, 32, 64] {
            let s = weighted_sum(3.0, n, 0);
            assert!((s.value() - big).abs() <= s.error_bound, "n = {n}");
        }
    }

    #[test]
    fn model_entries() {
        let si = NoiseModel::space_independent();
        assert_eq!(si.entries().len(), 2);
        assert_eq!(si.entries()[0], NoiseEntry { coeff: 1.0, advector: BasisMode::c(0, 0) });
        assert_eq!(si.entries()[1], NoiseEntry { coeff: 1.0, advector: BasisMode::s(0, 0) });

        let q0 = NoiseModel::q_wiener(0, 4.0).unwrap();
        assert_eq!(q0.entries().len(), 2);
        assert_abs_diff_eq!(q0.entries()[0].coeff, 1.0 / libm::sqrt(q0.cw()), epsilon = 1e-15);

        let q1 = NoiseModel::q_wiener(1, 4.0).unwrap();
        assert_eq!(q1.entries().len(), 18);
        let e = q1.entries().iter().find(|e| e.advector == BasisMode::c(1, 1)).unwrap();
        assert_abs_diff_eq!(e.coeff, libm::sqrt(0.125) / libm::sqrt(q1.cw()), epsilon = 1e-15);
    }

    #[test]
    fn zero_dt_gives_zero_increment() {
        let mut s = NoiseStream::new(1, 2);
        let dw = s.increment(&NoiseModel::space_independent(), 0.0, 0);
        assert!(dw.db.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn streams_are_counter_addressed() {
        let m = NoiseModel::q_wiener(2, 4.0).unwrap();
        let mut a = NoiseStream::new(7, 3);
        let mut b = NoiseStream::new(7, 3);
        let a5 = a.increment(&m, 0.1, 5);
        let _ = b.increment(&m, 0.1, 0);
        let b5 = b.increment(&m, 0.1, 5);
        assert_eq!(a5, b5);
        let other = NoiseStream::new(7, 4).increment(&m, 0.1, 5);
        assert_ne!(a5, other);
    }

    #[test]
    fn increment_moments() {
        let m = NoiseModel::space_independent();
        let dt = 0.01;
        let n = 100_000;
        let mut s = NoiseStream::new(11, 0);
        let (mut sum, mut sq) = (0.0, 0.0);
        for step in 0..n {
            let dw = s.increment(&m, dt, step);
            sum += dw.db[0];
            sq += dw.db[0] * dw.db[0];
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 * libm::sqrt(dt / n as f64));
        assert!((var / dt - 1.0).abs() < 0.05);
    }
}
