//! Divergence-free Fourier basis on the torus `Θ = [0, 2π]²`.
//!
//! For `k ≠ 0`
//!
//! ```text
//! 𝔠_k(θ) = (k², −k¹)/|k| · cos(k·θ)      𝔰_k(θ) = (k², −k¹)/|k| · sin(k·θ)
//! ```
//!
//! and `𝔠_0 = (1, 0)`, `𝔰_0 = (0, 1)`. The system is orthogonal but not
//! normalized: `‖𝔠_k‖₀² = ‖𝔰_k‖₀² = 2π²` for `k ≠ 0` and `4π²` for the
//! constant modes. All inner products carry these norms explicitly.
//!
//! Because `𝔠_{−k} = −𝔠_k` and `𝔰_{−k} = 𝔰_k`, a [`SpectralField`] stores one
//! coefficient pair per canonical wavevector (`k¹ > 0`, or `k¹ = 0` and
//! `k² > 0`) plus the constant pair.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::fft::{bin, wavenumber, Fft2};
use crate::{Error, Result};

/// `‖𝔠_k‖₀² = ‖𝔰_k‖₀²` for `k ≠ 0`.
pub const MODE_NORM_SQ: f64 = 2.0 * PI * PI;
/// `‖𝔠_0‖₀² = ‖𝔰_0‖₀²`, the area of the torus.
pub const CONST_MODE_NORM_SQ: f64 = 4.0 * PI * PI;

/// Wavevector `k = (k¹, k²) ∈ ℤ²`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub k1: i32,
    pub k2: i32,
}

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex { k1: 0, k2: 0 };

    pub const fn new(k1: i32, k2: i32) -> Self {
        Self { k1, k2 }
    }

    pub fn norm_sq(self) -> i64 {
        let (a, b) = (self.k1 as i64, self.k2 as i64);
        a * a + b * b
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_sq() as f64)
    }

    pub fn is_zero(self) -> bool {
        self.k1 == 0 && self.k2 == 0
    }

    pub fn is_canonical(self) -> bool {
        self.k1 > 0 || (self.k1 == 0 && self.k2 > 0)
    }

    /// Representative of `{k, −k}` on the canonical half-lattice, and whether
    /// `self` had to be negated to reach it.
    pub fn canonical(self) -> (ModeIndex, bool) {
        if self.is_zero() || self.is_canonical() {
            (self, false)
        } else {
            (-self, true)
        }
    }

    pub fn max_abs(self) -> usize {
        self.k1.unsigned_abs().max(self.k2.unsigned_abs()) as usize
    }

    pub fn component(self, axis: usize) -> i32 {
        if axis == 0 {
            self.k1
        } else {
            self.k2
        }
    }

    pub fn dot(self, theta: [f64; 2]) -> f64 {
        self.k1 as f64 * theta[0] + self.k2 as f64 * theta[1]
    }

    /// Unit vector `(k², −k¹)/|k|` orthogonal to `k`. Zero for `k = 0`.
    pub fn perp_unit(self) -> [f64; 2] {
        if self.is_zero() {
            return [0.0, 0.0];
        }
        let r = self.norm();
        [self.k2 as f64 / r, -(self.k1 as f64) / r]
    }
}

impl Neg for ModeIndex {
    type Output = ModeIndex;
    fn neg(self) -> ModeIndex {
        ModeIndex::new(-self.k1, -self.k2)
    }
}

impl Add for ModeIndex {
    type Output = ModeIndex;
    fn add(self, o: ModeIndex) -> ModeIndex {
        ModeIndex::new(self.k1 + o.k1, self.k2 + o.k2)
    }
}

impl Sub for ModeIndex {
    type Output = ModeIndex;
    fn sub(self, o: ModeIndex) -> ModeIndex {
        ModeIndex::new(self.k1 - o.k1, self.k2 - o.k2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeKind {
    /// `𝔠_k`
    C,
    /// `𝔰_k`
    S,
}

/// One basis vector field, `𝔠_k` or `𝔰_k`. The index need not be canonical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisMode {
    pub kind: ModeKind,
    pub index: ModeIndex,
}

/// Scalar profile of a mode along its direction vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Trig {
    One,
    Cos,
    Sin,
    NegSin,
}

impl BasisMode {
    pub const fn new(kind: ModeKind, index: ModeIndex) -> Self {
        Self { kind, index }
    }

    pub const fn c(k1: i32, k2: i32) -> Self {
        Self::new(ModeKind::C, ModeIndex::new(k1, k2))
    }

    pub const fn s(k1: i32, k2: i32) -> Self {
        Self::new(ModeKind::S, ModeIndex::new(k1, k2))
    }

    pub fn is_constant(self) -> bool {
        self.index.is_zero()
    }

    pub fn norm_sq(self) -> f64 {
        if self.is_constant() {
            CONST_MODE_NORM_SQ
        } else {
            MODE_NORM_SQ
        }
    }

    /// Canonical mode and the sign relating them: `self = sign · canonical`.
    pub fn canonical(self) -> (BasisMode, f64) {
        let (index, flipped) = self.index.canonical();
        let sign = match (flipped, self.kind) {
            (true, ModeKind::C) => -1.0,
            _ => 1.0,
        };
        (BasisMode::new(self.kind, index), sign)
    }

    /// Constant vector multiplying the scalar profile.
    pub fn direction(self) -> [f64; 2] {
        match (self.is_constant(), self.kind) {
            (true, ModeKind::C) => [1.0, 0.0],
            (true, ModeKind::S) => [0.0, 1.0],
            (false, _) => self.index.perp_unit(),
        }
    }

    pub(crate) fn trig(self) -> Trig {
        match (self.is_constant(), self.kind) {
            (true, _) => Trig::One,
            (false, ModeKind::C) => Trig::Cos,
            (false, ModeKind::S) => Trig::Sin,
        }
    }
}

impl core::fmt::Display for BasisMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let kind = match self.kind {
            ModeKind::C => 'C',
            ModeKind::S => 'S',
        };
        write!(f, "{kind}({},{})", self.index.k1, self.index.k2)
    }
}

/// Pointwise value of `𝔠_k(θ)` or `𝔰_k(θ)`.
pub fn eval_mode(mode: BasisMode, theta: [f64; 2]) -> [f64; 2] {
    let w = mode.direction();
    let x = mode.index.dot(theta);
    let s = match mode.trig() {
        Trig::One => 1.0,
        Trig::Cos => libm::cos(x),
        Trig::Sin => libm::sin(x),
        Trig::NegSin => -libm::sin(x),
    };
    [w[0] * s, w[1] * s]
}

/// The index set `I_n² = {−n, …, n}²` and the canonical mode enumeration over it.
///
/// Modes are numbered `0 ↦ 𝔠_0`, `1 ↦ 𝔰_0`, then `𝔠_k, 𝔰_k` for canonical `k`
/// ordered by `k¹` and then `k²`. `n = 0` is allowed and holds only the
/// constant modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TruncationSet {
    n: usize,
}

impl TruncationSet {
    pub const fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `|I_n²| = (2n + 1)²`.
    pub fn cardinality(&self) -> usize {
        (2 * self.n + 1) * (2 * self.n + 1)
    }

    /// Number of real coefficients in a field: `(2n + 1)² + 1`.
    pub fn num_modes(&self) -> usize {
        2 + 4 * self.n * (self.n + 1)
    }

    /// Smallest grid that represents a degree-`n` field without aliasing.
    pub fn min_grid(&self) -> usize {
        2 * self.n + 2
    }

    pub fn contains(&self, k: ModeIndex) -> bool {
        k.max_abs() <= self.n
    }

    /// Every wavevector of `I_n²`, row by row.
    pub fn lattice(&self) -> impl Iterator<Item = ModeIndex> {
        let n = self.n as i32;
        (-n..=n).flat_map(move |k1| (-n..=n).map(move |k2| ModeIndex::new(k1, k2)))
    }

    /// Canonical nonzero wavevectors, in storage order.
    pub fn canonical_wavevectors(&self) -> impl Iterator<Item = ModeIndex> {
        let n = self.n as i32;
        (1..=n)
            .map(|k2| ModeIndex::new(0, k2))
            .chain((1..=n).flat_map(move |k1| (-n..=n).map(move |k2| ModeIndex::new(k1, k2))))
    }

    /// Storage slot of the `𝔠` coefficient of canonical `k ≠ 0`.
    fn slot(&self, k: ModeIndex) -> usize {
        let n = self.n;
        let p = if k.k1 == 0 {
            k.k2 as usize - 1
        } else {
            n + (k.k1 as usize - 1) * (2 * n + 1) + (k.k2 + n as i32) as usize
        };
        2 + 2 * p
    }

    /// Storage index of `mode` (any sign of `k`) and the sign with which it
    /// maps onto the stored canonical mode.
    pub fn index_of(&self, mode: BasisMode) -> Option<(usize, f64)> {
        if !self.contains(mode.index) {
            return None;
        }
        let (canon, sign) = mode.canonical();
        let offset = match canon.kind {
            ModeKind::C => 0,
            ModeKind::S => 1,
        };
        let base = if canon.index.is_zero() { 0 } else { self.slot(canon.index) };
        Some((base + offset, sign))
    }

    /// Canonical mode stored at `idx`.
    pub fn mode_at(&self, idx: usize) -> BasisMode {
        let kind = if idx % 2 == 0 { ModeKind::C } else { ModeKind::S };
        if idx < 2 {
            return BasisMode::new(kind, ModeIndex::ZERO);
        }
        let p = (idx - 2) / 2;
        let n = self.n;
        let k = if p < n {
            ModeIndex::new(0, p as i32 + 1)
        } else {
            let q = p - n;
            ModeIndex::new((q / (2 * n + 1)) as i32 + 1, (q % (2 * n + 1)) as i32 - n as i32)
        };
        BasisMode::new(kind, k)
    }

    pub fn modes(&self) -> impl Iterator<Item = BasisMode> + '_ {
        (0..self.num_modes()).map(move |i| self.mode_at(i))
    }
}

/// Divergence-free velocity field `Σ_k u^{1k} 𝔠_k + u^{2k} 𝔰_k` over a truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    trunc: TruncationSet,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(trunc: TruncationSet) -> Self {
        Self { trunc, coeffs: vec![0.0; trunc.num_modes()] }
    }

    pub fn from_coeffs(trunc: TruncationSet, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != trunc.num_modes() {
            return Err(Error::DimensionMismatch { expected: trunc.num_modes(), found: coeffs.len() });
        }
        Ok(Self { trunc, coeffs })
    }

    /// Builds a field from `(mode, coefficient)` pairs; repeated modes add up.
    pub fn from_modes(trunc: TruncationSet, modes: &[(BasisMode, f64)]) -> Result<Self> {
        let mut f = Self::zeros(trunc);
        for &(mode, value) in modes {
            if !f.add_to(mode, value) {
                return Err(Error::ModeOutside { k1: mode.index.k1, k2: mode.index.k2, n: trunc.n() });
            }
        }
        Ok(f)
    }

    pub fn single(trunc: TruncationSet, mode: BasisMode, value: f64) -> Self {
        let mut f = Self::zeros(trunc);
        f.add_to(mode, value);
        f
    }

    pub fn trunc(&self) -> TruncationSet {
        self.trunc
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of `mode` in this field (zero outside the truncation).
    pub fn get(&self, mode: BasisMode) -> f64 {
        match self.trunc.index_of(mode) {
            Some((i, sign)) => sign * self.coeffs[i],
            None => 0.0,
        }
    }

    /// Adds `value · mode`. Returns `false` if the mode lies outside the truncation.
    pub fn add_to(&mut self, mode: BasisMode, value: f64) -> bool {
        match self.trunc.index_of(mode) {
            Some((i, sign)) => {
                self.coeffs[i] += sign * value;
                true
            }
            None => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisMode, f64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.trunc.mode_at(i), c))
    }

    /// Modes with nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = (BasisMode, f64)> + '_ {
        self.iter().filter(|&(_, c)| c != 0.0)
    }

    /// `⟨self, other⟩₀` over the common modes.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        if self.trunc == other.trunc {
            return self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .enumerate()
                .map(|(i, (a, b))| a * b * weight(i))
                .sum();
        }
        let small = if self.trunc.n() <= other.trunc.n() { self } else { other };
        small.iter().map(|(mode, _)| self.get(mode) * other.get(mode) * mode.norm_sq()).sum()
    }

    /// `⟨self, other⟩₁ = Σ_l ⟨∂_l self, ∂_l other⟩₀`.
    pub fn h1_inner(&self, other: &SpectralField) -> f64 {
        let small = if self.trunc.n() <= other.trunc.n() { self } else { other };
        small
            .iter()
            .map(|(mode, _)| {
                mode.index.norm_sq() as f64 * self.get(mode) * other.get(mode) * mode.norm_sq()
            })
            .sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn h1_norm_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * c * weight(i) * self.trunc.mode_at(i).index.norm_sq() as f64)
            .sum()
    }

    /// `self += a · x`.
    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        assert_eq!(self.trunc, x.trunc, "axpy across truncations");
        for (y, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *y += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= a);
    }

    /// Same field over another truncation: pads with zeros or drops modes.
    pub fn restrict(&self, trunc: TruncationSet) -> SpectralField {
        if trunc == self.trunc {
            return self.clone();
        }
        let mut out = SpectralField::zeros(trunc);
        for (i, mode) in trunc.modes().enumerate() {
            out.coeffs[i] = self.get(mode);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        (self - other).max_abs()
    }

    /// Pointwise value by direct summation over the modes.
    pub fn eval(&self, theta: [f64; 2]) -> [f64; 2] {
        self.support().fold([0.0, 0.0], |acc, (mode, c)| {
            let v = eval_mode(mode, theta);
            [acc[0] + c * v[0], acc[1] + c * v[1]]
        })
    }
}

#[inline]
fn weight(idx: usize) -> f64 {
    if idx < 2 {
        CONST_MODE_NORM_SQ
    } else {
        MODE_NORM_SQ
    }
}

impl Add<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(a);
        out
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self * -1.0
    }
}

pub fn l2_norm_sq(f: &SpectralField) -> f64 {
    f.l2_norm_sq()
}

/// Squared `H¹` seminorm `‖f‖₁² = Σ_l ‖∂_l f‖₀²`.
pub fn h1_norm_sq(f: &SpectralField) -> f64 {
    f.h1_norm_sq()
}

pub fn l2_norm(f: &SpectralField) -> f64 {
    libm::sqrt(f.l2_norm_sq())
}

pub fn h1_norm(f: &SpectralField) -> f64 {
    libm::sqrt(f.h1_norm_sq())
}

/// Componentwise derivatives `(∂₁f, ∂₂f)`. Each stays in the span of the same
/// modes: `∂_l` maps the pair `(a, b)` at `k` to `(k_l b, −k_l a)`.
pub fn gradient(f: &SpectralField) -> [SpectralField; 2] {
    [derivative(f, 0), derivative(f, 1)]
}

pub fn derivative(f: &SpectralField, axis: usize) -> SpectralField {
    let trunc = f.trunc();
    let mut out = SpectralField::zeros(trunc);
    for (p, k) in trunc.canonical_wavevectors().enumerate() {
        let i = 2 + 2 * p;
        let kl = k.component(axis) as f64;
        let (a, b) = (f.coeffs[i], f.coeffs[i + 1]);
        out.coeffs[i] = kl * b;
        out.coeffs[i + 1] = -kl * a;
    }
    out
}

/// Values of a 2-vector field at the nodes `θ_ab = (2πa/m, 2πb/m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    m: usize,
    values: Vec<[f64; 2]>,
}

impl GridField {
    pub fn zeros(m: usize) -> Self {
        Self { m, values: vec![[0.0, 0.0]; m * m] }
    }

    pub fn from_fn(m: usize, mut f: impl FnMut([f64; 2]) -> [f64; 2]) -> Self {
        let mut g = Self::zeros(m);
        for a in 0..m {
            for b in 0..m {
                g.values[a * m + b] = f(node(m, a, b));
            }
        }
        g
    }

    pub fn from_values(m: usize, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != m * m {
            return Err(Error::DimensionMismatch { expected: m * m, found: values.len() });
        }
        Ok(Self { m, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, a: usize, b: usize) -> [f64; 2] {
        self.values[a * self.m + b]
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn node(&self, a: usize, b: usize) -> [f64; 2] {
        node(self.m, a, b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v[0].abs()).max(v[1].abs()))
    }

    /// Trapezoid approximation of `⟨self, other⟩₀`; exact for trigonometric
    /// polynomials whose product has degree below `m`.
    pub fn inner(&self, other: &GridField) -> f64 {
        let h = 2.0 * PI / self.m as f64;
        h * h * self.values.iter().zip(&other.values).map(|(u, v)| u[0] * v[0] + u[1] * v[1]).sum::<f64>()
    }
}

fn node(m: usize, a: usize, b: usize) -> [f64; 2] {
    let h = 2.0 * PI / m as f64;
    [h * a as f64, h * b as f64]
}

/// Full complex Fourier coefficients `û(k)` of both velocity components, with
/// `u(θ) = Σ_k û(k) e^{ik·θ}` over the `m × m` bins of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    m: usize,
    hat: [Vec<Complex64>; 2],
}

impl FourierField {
    pub fn from_grid(g: &GridField) -> Result<Self> {
        let m = g.m();
        let mut plan = Fft2::new(m)?;
        let mut z: Vec<Complex64> = g.values().iter().map(|v| Complex64::new(v[0], v[1])).collect();
        plan.forward(&mut z);
        let scale = 1.0 / (m * m) as f64;
        let mut hat = [vec![Complex64::new(0.0, 0.0); m * m], vec![Complex64::new(0.0, 0.0); m * m]];
        for a in 0..m {
            for b in 0..m {
                let zk = z[a * m + b] * scale;
                let zm = z[((m - a) % m) * m + (m - b) % m].conj() * scale;
                hat[0][a * m + b] = (zk + zm) * 0.5;
                hat[1][a * m + b] = (zk - zm) * Complex64::new(0.0, -0.5);
            }
        }
        Ok(Self { m, hat })
    }

    pub fn from_spectral(f: &SpectralField, m: usize) -> Result<Self> {
        Self::from_grid(&synthesize(f, m)?)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `û(k)` for a wavevector inside the grid band.
    pub fn get(&self, k: ModeIndex) -> [Complex64; 2] {
        let i = bin(k.k1, self.m) * self.m + bin(k.k2, self.m);
        [self.hat[0][i], self.hat[1][i]]
    }

    pub fn to_grid(&self) -> Result<GridField> {
        let m = self.m;
        let mut plan = Fft2::new(m)?;
        let mut z: Vec<Complex64> =
            self.hat[0].iter().zip(&self.hat[1]).map(|(a, b)| a + Complex64::new(0.0, 1.0) * b).collect();
        plan.inverse(&mut z);
        GridField::from_values(m, z.iter().map(|c| [c.re, c.im]).collect())
    }

    /// Removes the gradient part of each Fourier coefficient (projection onto
    /// the plane orthogonal to `k`); `k = 0` passes through and the Nyquist
    /// bins, which carry no well-defined direction, are cleared.
    pub fn leray_project(&self) -> FourierField {
        let m = self.m;
        let mut out = self.clone();
        let nyquist = -(m as i32) / 2;
        for a in 0..m {
            for b in 0..m {
                let (k1, k2) = (wavenumber(a, m), wavenumber(b, m));
                let i = a * m + b;
                if m > 1 && (k1 == nyquist || k2 == nyquist) {
                    out.hat[0][i] = Complex64::new(0.0, 0.0);
                    out.hat[1][i] = Complex64::new(0.0, 0.0);
                    continue;
                }
                if k1 == 0 && k2 == 0 {
                    continue;
                }
                let (x, y) = (k1 as f64, k2 as f64);
                let dot = self.hat[0][i] * x + self.hat[1][i] * y;
                let r2 = x * x + y * y;
                out.hat[0][i] -= dot * (x / r2);
                out.hat[1][i] -= dot * (y / r2);
            }
        }
        out
    }

    /// Spectral divergence evaluated on the grid nodes.
    pub fn divergence(&self) -> Result<Vec<f64>> {
        let m = self.m;
        let nyquist = -(m as i32) / 2;
        let mut z = vec![Complex64::new(0.0, 0.0); m * m];
        for a in 0..m {
            for b in 0..m {
                let (k1, k2) = (wavenumber(a, m), wavenumber(b, m));
                if k1 == nyquist || k2 == nyquist {
                    continue;
                }
                let i = a * m + b;
                z[i] = Complex64::new(0.0, 1.0) * (self.hat[0][i] * k1 as f64 + self.hat[1][i] * k2 as f64);
            }
        }
        Fft2::new(m)?.inverse(&mut z);
        Ok(z.iter().map(|c| c.re).collect())
    }

    /// Coefficients over `trunc` of the divergence-free part of this field.
    pub fn to_spectral(&self, trunc: TruncationSet) -> Result<SpectralField> {
        check_grid(self.m, trunc)?;
        let mut out = SpectralField::zeros(trunc);
        out.coeffs[0] = self.hat[0][0].re;
        out.coeffs[1] = self.hat[1][0].re;
        for (p, k) in trunc.canonical_wavevectors().enumerate() {
            let [u1, u2] = self.get(k);
            let w = k.perp_unit();
            let s = u1 * w[0] + u2 * w[1];
            out.coeffs[2 + 2 * p] = 2.0 * s.re;
            out.coeffs[3 + 2 * p] = -2.0 * s.im;
        }
        Ok(out)
    }
}

fn check_grid(m: usize, trunc: TruncationSet) -> Result<()> {
    if m < trunc.min_grid() {
        return Err(Error::ResolutionTooSmall { m, min: trunc.min_grid() });
    }
    if !m.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(m));
    }
    Ok(())
}

/// Smallest power of two that is at least `min`.
pub fn grid_size(min: usize) -> usize {
    min.max(1).next_power_of_two()
}

/// Evaluates `f` on the `m × m` grid. Requires `m ≥ 2n + 2`, a power of two.
pub fn synthesize(f: &SpectralField, m: usize) -> Result<GridField> {
    check_grid(m, f.trunc())?;
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
    scatter_packed(f, m, &mut buf);
    Fft2::new(m)?.inverse_banded(&mut buf, f.trunc().n());
    GridField::from_values(m, buf.iter().map(|c| [c.re, c.im]).collect())
}

/// Projects grid values onto the modes of `trunc`. Any gradient content is
/// discarded, so a field that is not divergence-free comes back as its
/// Leray projection. Exact when `g` is a trigonometric polynomial of degree
/// below `m/2`.
pub fn analyze(g: &GridField, trunc: TruncationSet) -> Result<SpectralField> {
    let m = g.m();
    check_grid(m, trunc)?;
    let mut buf: Vec<Complex64> = g.values().iter().map(|v| Complex64::new(v[0], v[1])).collect();
    Fft2::new(m)?.forward_banded(&mut buf, trunc.n());
    let mut out = SpectralField::zeros(trunc);
    gather_packed(&buf, m, 1.0 / (m * m) as f64, &mut out);
    Ok(out)
}

/// Leray projection of grid data, truncated to `trunc`.
pub fn leray_project(g: &GridField, trunc: TruncationSet) -> Result<SpectralField> {
    FourierField::from_grid(g)?.leray_project().to_spectral(trunc)
}

/// `max |div f|` over the collocation grid, by spectral differentiation.
pub fn divergence_max(f: &SpectralField) -> f64 {
    let m = grid_size(f.trunc().min_grid());
    synthesize(f, m).and_then(|g| divergence_max_grid(&g)).expect("grid sized from the truncation")
}

pub fn divergence_max_grid(g: &GridField) -> Result<f64> {
    let div = FourierField::from_grid(g)?.divergence()?;
    Ok(div.iter().fold(0.0, |m: f64, d| m.max(d.abs())))
}

/// Writes the packed spectrum `Z(k) = û₁(k) + i û₂(k)` of `f` into the
/// `m × m` buffer, so that one inverse FFT yields `u₁ + i u₂`.
pub(crate) fn scatter_packed(f: &SpectralField, m: usize, buf: &mut [Complex64]) {
    buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    add_packed(f, m, 1.0, buf);
}

/// Adds `scale ·` the packed spectrum of `f` to `buf`.
pub(crate) fn add_packed(f: &SpectralField, m: usize, scale: f64, buf: &mut [Complex64]) {
    buf[0] += Complex64::new(f.coeffs[0], f.coeffs[1]) * scale;
    for (p, k) in f.trunc().canonical_wavevectors().enumerate() {
        let (a, b) = (f.coeffs[2 + 2 * p], f.coeffs[3 + 2 * p]);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let w = k.perp_unit();
        let dir = Complex64::new(w[0], w[1]);
        // a cos x + b sin x = c e^{ix} + c̄ e^{−ix}
        let c = Complex64::new(0.5 * a, -0.5 * b) * scale;
        buf[bin(k.k1, m) * m + bin(k.k2, m)] += dir * c;
        buf[bin(-k.k1, m) * m + bin(-k.k2, m)] += dir * c.conj();
    }
}

/// Inverse of [`scatter_packed`] for a forward-transformed product: reads the
/// packed spectrum, projects each wavevector onto its divergence-free
/// direction and writes the coefficients of `out`.
pub(crate) fn gather_packed(buf: &[Complex64], m: usize, scale: f64, out: &mut SpectralField) {
    let z0 = buf[0] * scale;
    out.coeffs[0] = z0.re;
    out.coeffs[1] = z0.im;
    let trunc = out.trunc();
    for (p, k) in trunc.canonical_wavevectors().enumerate() {
        let zk = buf[bin(k.k1, m) * m + bin(k.k2, m)] * scale;
        let zm = buf[bin(-k.k1, m) * m + bin(-k.k2, m)].conj() * scale;
        let u1 = (zk + zm) * 0.5;
        let u2 = (zk - zm) * Complex64::new(0.0, -0.5);
        let w = k.perp_unit();
        let s = u1 * w[0] + u2 * w[1];
        out.coeffs[2 + 2 * p] = 2.0 * s.re;
        out.coeffs[3 + 2 * p] = -2.0 * s.im;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn close(a: [f64; 2], b: [f64; 2], tol: f64) -> bool {
        (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol
    }

    #[test]
    fn eval_mode_examples() {
        assert_eq!(eval_mode(BasisMode::c(0, 0), [1.0, 2.0]), [1.0, 0.0]);
        assert_eq!(eval_mode(BasisMode::s(0, 0), [1.0, 2.0]), [0.0, 1.0]);
        let v = eval_mode(BasisMode::s(1, 0), [0.0, 0.0]);
        assert_eq!(v[0].abs() + v[1].abs(), 0.0);
        assert!(close(eval_mode(BasisMode::c(1, 1), [PI / 2.0, 0.0]), [0.0, 0.0], 1e-15));
        // k = (1, 1) at θ = 0: (1, −1)/√2
        let r = core::f64::consts::FRAC_1_SQRT_2;
        assert!(close(eval_mode(BasisMode::c(1, 1), [0.0, 0.0]), [r, -r], 1e-15));
    }

    #[test]
    fn negated_wavevector_signs() {
        let th = [0.37, 1.91];
        for k in [ModeIndex::new(1, 2), ModeIndex::new(0, 3), ModeIndex::new(2, -1)] {
            let c = eval_mode(BasisMode::new(ModeKind::C, k), th);
            let cm = eval_mode(BasisMode::new(ModeKind::C, -k), th);
            let s = eval_mode(BasisMode::new(ModeKind::S, k), th);
            let sm = eval_mode(BasisMode::new(ModeKind::S, -k), th);
            assert!(close(cm, [-c[0], -c[1]], 1e-15));
            assert!(close(sm, s, 1e-15));
            let (canon, sign) = BasisMode::new(ModeKind::C, -k).canonical();
            let v = eval_mode(canon, th);
            assert!(close([sign * v[0], sign * v[1]], cm, 1e-15));
        }
    }

    #[test]
    fn truncation_enumeration_is_consistent() {
        for n in 0..5 {
            let t = TruncationSet::new(n);
            assert_eq!(t.cardinality(), (2 * n + 1).pow(2));
            assert_eq!(t.num_modes(), t.cardinality() + 1);
            assert_eq!(t.canonical_wavevectors().count(), (t.cardinality() - 1) / 2);
            for (i, mode) in t.modes().enumerate() {
                assert_eq!(t.index_of(mode), Some((i, 1.0)));
            }
            // closed under k ↦ −k
            for k in t.lattice() {
                assert!(t.contains(-k));
            }
        }
    }

    #[test]
    fn synthesize_examples() {
        let t = TruncationSet::new(2);
        let g = synthesize(&SpectralField::zeros(t), 8).unwrap();
        assert_eq!(g.max_abs(), 0.0);

        let f = SpectralField::from_modes(t, &[(BasisMode::c(0, 0), 3.0)]).unwrap();
        let g = synthesize(&f, 8).unwrap();
        assert!(g.values().iter().all(|v| close(*v, [3.0, 0.0], 1e-14)));

        let f = SpectralField::from_modes(TruncationSet::new(1), &[(BasisMode::c(1, 0), 1.0)]).unwrap();
        let g = synthesize(&f, 8).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                assert!(close(g.get(a, b), eval_mode(BasisMode::c(1, 0), g.node(a, b)), 1e-14));
            }
        }
    }

    #[test]
    fn synthesize_rejects_small_grid() {
        let f = SpectralField::zeros(TruncationSet::new(4));
        assert_eq!(synthesize(&f, 8).unwrap_err(), Error::ResolutionTooSmall { m: 8, min: 10 });
        assert_eq!(synthesize(&f, 12).unwrap_err(), Error::NotPowerOfTwo(12));
    }

    #[test]
    fn analyze_drops_gradient_content() {
        // (cos θ¹, 0) = ∇ sin θ¹ is a pure gradient
        let g = GridField::from_fn(16, |th| [libm::cos(th[0]), 0.0]);
        let f = analyze(&g, TruncationSet::new(3)).unwrap();
        assert!(f.max_abs() < 1e-14);
        assert_abs_diff_eq!(divergence_max_grid(&g).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn norm_examples() {
        let t = TruncationSet::new(1);
        let f = SpectralField::from_modes(t, &[(BasisMode::c(1, 0), 1.0)]).unwrap();
        assert_abs_diff_eq!(f.l2_norm_sq(), 2.0 * PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(f.h1_norm_sq(), 2.0 * PI * PI, epsilon = 1e-12);
        let f = SpectralField::from_modes(t, &[(BasisMode::c(0, 0), 3.0)]).unwrap();
        assert_abs_diff_eq!(f.l2_norm_sq(), 36.0 * PI * PI, epsilon = 1e-10);
        assert_eq!(f.h1_norm_sq(), 0.0);
    }

    #[test]
    fn gradient_examples() {
        let t = TruncationSet::new(1);
        let [d1, d2] = gradient(&SpectralField::single(t, BasisMode::c(0, 0), 1.0));
        assert_eq!(d1.max_abs() + d2.max_abs(), 0.0);
        let [d1, d2] = gradient(&SpectralField::single(t, BasisMode::c(1, 0), 1.0));
        assert_eq!(d1, SpectralField::single(t, BasisMode::s(1, 0), -1.0));
        assert_eq!(d2.max_abs(), 0.0);
    }

    #[test]
    fn leray_examples() {
        let m = 16;
        let pure_grad = GridField::from_fn(m, |th| [-libm::sin(th[0]), 0.0]);
        let p = FourierField::from_grid(&pure_grad).unwrap().leray_project();
        assert!(p.to_grid().unwrap().max_abs() < 1e-14);

        // ψ-part plus gradient of φ = cos(θ¹ + 2θ²)
        let mixed = GridField::from_fn(m, |th| {
            let s = libm::sin(th[0] + 2.0 * th[1]);
            [libm::cos(th[1]) - s, -2.0 * s]
        });
        let out = FourierField::from_grid(&mixed).unwrap().leray_project().to_grid().unwrap();
        for a in 0..m {
            for b in 0..m {
                let th = out.node(a, b);
                assert!(close(out.get(a, b), [libm::cos(th[1]), 0.0], 1e-13));
            }
        }
        // quadrature check ⟨P u, ∇φ⟩ = 0 for a few test potentials
        for (p1, p2) in [(1, 0), (1, 2), (3, -1)] {
            let grad = GridField::from_fn(m, |th| {
                let s = -libm::sin(p1 as f64 * th[0] + p2 as f64 * th[1]);
                [p1 as f64 * s, p2 as f64 * s]
            });
            assert!(out.inner(&grad).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_eigenvectors() {
        let t = TruncationSet::new(4);
        for mode in t.modes() {
            let f = SpectralField::single(t, mode, 1.0);
            let [d1, d2] = gradient(&f);
            let [d11, _] = gradient(&d1);
            let [_, d22] = gradient(&d2);
            let lap = &d11 + &d22;
            let expected = &f * -(mode.index.norm_sq() as f64);
            assert!(lap.max_abs_diff(&expected) < 1e-12);
        }
    }

    #[test]
    fn every_mode_is_divergence_free() {
        let t = TruncationSet::new(4);
        for mode in t.modes() {
            assert!(divergence_max(&SpectralField::single(t, mode, 1.0)) < 1e-12);
        }
    }

    fn field_strategy(n: usize) -> impl Strategy<Value = SpectralField> {
        let t = TruncationSet::new(n);
        proptest::collection::vec(-1.0f64..1.0, t.num_modes())
            .prop_map(move |c| SpectralField::from_coeffs(t, c).unwrap())
    }

    proptest! {
        #[test]
        fn round_trip_identity(f in field_strategy(4)) {
            let back = analyze(&synthesize(&f, 16).unwrap(), f.trunc()).unwrap();
            prop_assert!(back.max_abs_diff(&f) <= 1e-12 * f.max_abs().max(1.0));
        }

        #[test]
        fn parseval(f in field_strategy(3)) {
            let g = synthesize(&f, 32).unwrap();
            let quad = g.inner(&g);
            prop_assert!((quad - f.l2_norm_sq()).abs() <= 1e-10 * f.l2_norm_sq().max(1e-300));
        }

        #[test]
        fn divergence_vanishes(f in field_strategy(5)) {
            prop_assert!(divergence_max(&f) <= 1e-10);
        }

        #[test]
        fn leray_idempotent_and_self_adjoint(
            a in proptest::collection::vec(-1.0f64..1.0, 2 * 64),
            b in proptest::collection::vec(-1.0f64..1.0, 2 * 64),
        ) {
            let m = 8;
            let ga = GridField::from_values(m, a.chunks(2).map(|c| [c[0], c[1]]).collect()).unwrap();
            let gb = GridField::from_values(m, b.chunks(2).map(|c| [c[0], c[1]]).collect()).unwrap();
            let pa = FourierField::from_grid(&ga).unwrap().leray_project();
            let pb = FourierField::from_grid(&gb).unwrap().leray_project();
            let ppa = pa.leray_project().to_grid().unwrap();
            let pa = pa.to_grid().unwrap();
            let pb = pb.to_grid().unwrap();
            for (x, y) in ppa.values().iter().zip(pa.values()) {
                prop_assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
            }
            prop_assert!((pa.inner(&gb) - ga.inner(&pb)).abs() < 1e-10);
            prop_assert!(divergence_max_grid(&pa).unwrap() < 1e-10);
        }
    }
}
