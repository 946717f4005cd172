//! Time stepping of the Galerkin system and the sequential ensemble runner.
//!
//! Every scheme evaluates the drift and the noise together through the
//! combined advector `ΔW − Δt·m`, since
//!
//! ```text
//! P_n[((ΔW − Δt m)·∇) m] = −Δt ℬ(m) + Σ_e σ_e ΔB_e P_n[(a_e·∇) m].
//! ```
//!
//! The implicit midpoint rule additionally splits off the constant part of
//! `ΔW`, which acts on each wavevector as a plane rotation, and solves it
//! exactly by a Cayley transform; the remainder is resolved by fixed-point
//! iteration. Because both parts are skew, the step conserves `‖u‖₀²` up to
//! the iteration tolerance.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;
#[cfg(test)]
use alloc::vec;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::{BasisMode, SpectralField, TruncationSet};
use crate::diagnostics::{coefficient_probe, h1_envelope, relative_drift, MartingaleProbe, ProbeForms};
use crate::dynamics::{SpectralOps, VISCOSITY};
use crate::noise::{advector_increment, NoiseModel, NoiseStream, WienerIncrement};
use crate::stats::RunningStats;
use crate::{Error, Result};

pub const MIDPOINT_TOLERANCE: f64 = 1e-12;
pub const MIDPOINT_MAX_ITERATIONS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Explicit Euler–Maruyama on the Itô form.
    ItoEulerMaruyama,
    /// Heun predictor–corrector on the Stratonovich form.
    StratHeun,
    /// Implicit midpoint on the Stratonovich form.
    StratImplicitMidpoint,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ItoEulerMaruyama => "ito-em",
            Scheme::StratHeun => "strat-heun",
            Scheme::StratImplicitMidpoint => "strat-midpoint",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// One basis field with unit coefficient.
    Mode(BasisMode),
    /// `𝔠_{(1,0)} + 𝔠_{(1,1)}`, the smallest pair with nonzero `ℬ`.
    Pair,
    /// Gaussian coefficients scaled by `|k|^{−decay}`, drawn from the seed.
    Random { decay: f64 },
    Coefficients(Vec<(BasisMode, f64)>),
}

impl InitialCondition {
    pub fn build(&self, trunc: TruncationSet, seed: u64) -> Result<SpectralField> {
        match self {
            InitialCondition::Mode(m) => SpectralField::from_modes(trunc, &[(*m, 1.0)]),
            InitialCondition::Pair => {
                SpectralField::from_modes(trunc, &[(BasisMode::c(1, 0), 1.0), (BasisMode::c(1, 1), 1.0)])
            }
            InitialCondition::Random { decay } => {
                let mut stream = NoiseStream::new(seed, NoiseStream::INITIAL_CONDITION);
                let rng = stream.rng();
                let mut f = SpectralField::zeros(trunc);
                for (i, mode) in trunc.modes().enumerate().skip(2) {
                    let z: f64 = StandardNormal.sample(rng);
                    f.coeffs_mut()[i] = z * libm::pow(mode.index.norm(), -decay);
                }
                Ok(f)
            }
            InitialCondition::Coefficients(list) => SpectralField::from_modes(trunc, list),
        }
    }
}

/// Field with independent standard normal coefficients on every mode,
/// constant modes included; stream `stream` of `seed`.
pub fn random_field(trunc: TruncationSet, seed: u64, stream: u64) -> SpectralField {
    let mut s = NoiseStream::new(seed, stream);
    let rng = s.rng();
    let c = (0..trunc.num_modes()).map(|_| StandardNormal.sample(&mut *rng)).collect();
    SpectralField::from_coeffs(trunc, c).expect("length matches the truncation")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub noise: NoiseModel,
    pub paths: usize,
    pub seed: u64,
    pub initial: InitialCondition,
    /// Keep every `save_every`-th state.
    pub save_every: usize,
}

impl SimConfig {
    /// Desk-scale defaults: `n = 8`, `Δt = 10⁻³`, `T = 1`, 256 paths,
    /// space-independent noise, implicit midpoint, pair initial condition.
    pub fn desk() -> Self {
        Self {
            n: 8,
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::StratImplicitMidpoint,
            noise: NoiseModel::space_independent(),
            paths: 256,
            seed: 0,
            initial: InitialCondition::Pair,
            save_every: 10,
        }
    }

    pub fn trunc(&self) -> TruncationSet {
        TruncationSet::new(self.n)
    }

    /// Number of steps, `T / Δt` rounded.
    pub fn steps(&self) -> usize {
        libm::round(self.t_end / self.dt) as usize
    }

    /// Collects every violated constraint.
    pub fn validate(&self) -> Result<()> {
        let mut errs: Vec<String> = Vec::new();
        if self.n < 1 {
            errs.push("n must be at least 1".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            errs.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            errs.push(format!("T must be at least dt, got T = {} and dt = {}", self.t_end, self.dt));
        } else if self.dt > 0.0 {
            let r = self.t_end / self.dt;
            if (r - libm::round(r)).abs() > 1e-9 * r {
                errs.push(format!("T = {} is not a whole number of steps of dt = {}", self.t_end, self.dt));
            }
        }
        if self.paths < 1 {
            errs.push("paths must be at least 1".into());
        }
        if self.save_every < 1 {
            errs.push("save-every must be at least 1".into());
        }
        if let InitialCondition::Random { decay } = self.initial {
            if !(decay >= 0.0 && decay.is_finite()) {
                errs.push(format!("random initial condition needs a finite decay >= 0, got {decay}"));
            }
        }
        if matches!(self.initial, InitialCondition::Pair) && self.n < 1 {
            errs.push("the pair initial condition needs n >= 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(errs))
        }
    }
}

/// One-step map of a scheme, with its scratch space.
#[derive(Clone, Debug)]
pub struct Stepper {
    scheme: Scheme,
    model: NoiseModel,
    trunc: TruncationSet,
    adv_trunc: TruncationSet,
    ops: SpectralOps,
    lambda: Vec<f64>,
    u_grid: Vec<Complex64>,
    x_grid: Vec<Complex64>,
    a_grid: Vec<Complex64>,
    w_grid: Vec<Complex64>,
    nl: SpectralField,
    tolerance: f64,
    max_iterations: usize,
    iterations: usize,
}

impl Stepper {
    pub fn new(scheme: Scheme, trunc: TruncationSet, model: &NoiseModel) -> Result<Self> {
        let adv_trunc = TruncationSet::new(model.degree());
        let ops = SpectralOps::new(trunc, model.degree())?;
        let lambda = trunc.modes().map(|m| m.index.norm_sq() as f64).collect();
        Ok(Self {
            scheme,
            model: model.clone(),
            trunc,
            adv_trunc,
            u_grid: ops.grid_buffer(),
            x_grid: ops.grid_buffer(),
            a_grid: ops.grid_buffer(),
            w_grid: ops.grid_buffer(),
            ops,
            lambda,
            nl: SpectralField::zeros(trunc),
            tolerance: MIDPOINT_TOLERANCE,
            max_iterations: MIDPOINT_MAX_ITERATIONS,
            iterations: 0,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    /// Fixed-point iterations used by the last midpoint step.
    pub fn last_iterations(&self) -> usize {
        self.iterations
    }

    pub fn set_tolerance(&mut self, tolerance: f64, max_iterations: usize) {
        self.tolerance = tolerance;
        self.max_iterations = max_iterations;
    }

    /// Advances `u` by one step driven by `dw`.
    pub fn step(&mut self, u: &SpectralField, dw: &WienerIncrement) -> Result<SpectralField> {
        if u.trunc() != self.trunc {
            return Err(Error::TruncationMismatch { expected: self.trunc.n(), found: u.trunc().n() });
        }
        if dw.db.len() != self.model.entries().len() {
            return Err(Error::DimensionMismatch { expected: self.model.entries().len(), found: dw.db.len() });
        }
        let c = self.load_noise(dw);
        match self.scheme {
            Scheme::ItoEulerMaruyama => Ok(self.euler_maruyama(u, dw.dt, c)),
            Scheme::StratHeun => Ok(self.heun(u, dw.dt, c)),
            Scheme::StratImplicitMidpoint => self.midpoint(u, dw.dt, c),
        }
    }

    /// Puts the space-dependent part of `ΔW` on the grid and returns the
    /// constant part.
    fn load_noise(&mut self, dw: &WienerIncrement) -> Complex64 {
        let mut field = advector_increment(&self.model, dw, self.adv_trunc);
        let c = Complex64::new(field.coeffs()[0], field.coeffs()[1]);
        field.coeffs_mut()[0] = 0.0;
        field.coeffs_mut()[1] = 0.0;
        if field.max_abs() == 0.0 {
            self.w_grid.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        } else {
            self.ops.synthesize_into(&field, &mut self.w_grid);
        }
        c
    }

    /// `P_n[((c + W_r − Δt v)·∇) v]` where `v_grid` already holds `v`.
    fn combined(&mut self, c: Complex64, dt: f64, out: &mut SpectralField) {
        for ((a, w), v) in self.a_grid.iter_mut().zip(&self.w_grid).zip(&self.x_grid) {
            *a = c + w - v * dt;
        }
        self.ops.advect_grids(&self.a_grid, &self.x_grid, out);
    }

    fn euler_maruyama(&mut self, u: &SpectralField, dt: f64, c: Complex64) -> SpectralField {
        self.ops.synthesize_into(u, &mut self.x_grid);
        let mut nl = core::mem::replace(&mut self.nl, SpectralField::zeros(self.trunc));
        self.combined(c, dt, &mut nl);
        let mut x = u.clone();
        for ((xi, li), ni) in x.coeffs_mut().iter_mut().zip(&self.lambda).zip(nl.coeffs()) {
            *xi = *xi * (1.0 - VISCOSITY * dt * li) + ni;
        }
        self.nl = nl;
        x
    }

    fn heun(&mut self, u: &SpectralField, dt: f64, c: Complex64) -> SpectralField {
        let mut k1 = SpectralField::zeros(self.trunc);
        let mut k2 = SpectralField::zeros(self.trunc);
        self.ops.synthesize_into(u, &mut self.x_grid);
        self.combined(c, dt, &mut k1);
        let mut pred = u.clone();
        pred.axpy(1.0, &k1);
        self.ops.synthesize_into(&pred, &mut self.x_grid);
        self.combined(c, dt, &mut k2);
        let mut x = u.clone();
        x.axpy(0.5, &k1);
        x.axpy(0.5, &k2);
        x
    }

    fn midpoint(&mut self, u: &SpectralField, dt: f64, c: Complex64) -> Result<SpectralField> {
        // φ_k = c·k: the constant advector rotates the pair (a, b) at k by
        // (a, b) ↦ (φ b, −φ a)
        let phis: Vec<f64> = self.trunc.canonical_wavevectors().map(|k| c.re * k.k1 as f64 + c.im * k.k2 as f64).collect();
        let mut rhs0 = u.clone();
        {
            let r = rhs0.coeffs_mut();
            for (p, &phi) in phis.iter().enumerate() {
                let (a, b) = (r[2 + 2 * p], r[3 + 2 * p]);
                r[2 + 2 * p] = a + 0.5 * phi * b;
                r[3 + 2 * p] = b - 0.5 * phi * a;
            }
        }
        self.ops.synthesize_into(u, &mut self.u_grid);
        self.x_grid.copy_from_slice(&self.u_grid);
        let scale = u.max_abs().max(1.0);
        let mut x = u.clone();
        let mut next = u.clone();
        let mut nl = core::mem::replace(&mut self.nl, SpectralField::zeros(self.trunc));
        let mut residual = f64::INFINITY;
        for it in 1..=self.max_iterations {
            for (xg, ug) in self.x_grid.iter_mut().zip(&self.u_grid) {
                *xg = (*xg + ug) * 0.5;
            }
            // only the space-dependent noise enters the iteration
            self.combined(Complex64::new(0.0, 0.0), dt, &mut nl);
            {
                let (nx, r0, n) = (next.coeffs_mut(), rhs0.coeffs(), nl.coeffs());
                nx[0] = r0[0] + n[0];
                nx[1] = r0[1] + n[1];
                for (p, &phi) in phis.iter().enumerate() {
                    let (ra, rb) = (r0[2 + 2 * p] + n[2 + 2 * p], r0[3 + 2 * p] + n[3 + 2 * p]);
                    let h = 0.5 * phi;
                    let det = 1.0 + h * h;
                    nx[2 + 2 * p] = (ra + h * rb) / det;
                    nx[3 + 2 * p] = (rb - h * ra) / det;
                }
            }
            residual = next.max_abs_diff(&x);
            core::mem::swap(&mut x, &mut next);
            if residual <= self.tolerance * scale {
                self.iterations = it;
                self.nl = nl;
                return Ok(x);
            }
            self.ops.synthesize_into(&x, &mut self.x_grid);
        }
        self.nl = nl;
        Err(Error::MidpointNotConverged { iterations: self.max_iterations, residual })
    }
}

/// One step of `scheme` from `u`; builds a fresh workspace.
pub fn step(scheme: Scheme, u: &SpectralField, dw: &WienerIncrement, model: &NoiseModel) -> Result<SpectralField> {
    Stepper::new(scheme, u.trunc(), model)?.step(u, dw)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub path_id: u64,
    pub dt: f64,
    pub save_every: usize,
    /// Times of the saved states.
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    /// `‖u‖₀²` after every step, starting with the initial field.
    pub l2: Vec<f64>,
    /// `‖u‖₁²` after every step.
    pub h1: Vec<f64>,
}

impl PathResult {
    pub fn step_times(&self) -> Vec<f64> {
        (0..self.l2.len()).map(|i| i as f64 * self.dt).collect()
    }

    pub fn final_state(&self) -> Option<&SpectralField> {
        self.states.last()
    }
}

/// A configured run: initial field, stepper and counter-based noise.
#[derive(Clone, Debug)]
pub struct Simulator {
    config: SimConfig,
    stepper: Stepper,
    u0: SpectralField,
}

impl Simulator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let trunc = config.trunc();
        let u0 = config.initial.build(trunc, config.seed)?;
        let stepper = Stepper::new(config.scheme, trunc, &config.noise)?;
        Ok(Self { config: config.clone(), stepper, u0 })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn initial(&self) -> &SpectralField {
        &self.u0
    }

    pub fn stepper_mut(&mut self) -> &mut Stepper {
        &mut self.stepper
    }

    /// The noise of path `path_id`, step by step.
    pub fn increments(&self, path_id: u64) -> impl FnMut(u64) -> WienerIncrement {
        let mut stream = NoiseStream::new(self.config.seed, path_id);
        let model = self.config.noise.clone();
        let dt = self.config.dt;
        move |step| stream.increment(&model, dt, step)
    }

    /// Runs all steps with increments from `incr`, calling `observe(step, t, u)`
    /// on the initial field and after every step. Returns the final field.
    pub fn run_with<F, O>(&mut self, mut incr: F, mut observe: O) -> Result<SpectralField>
    where
        F: FnMut(u64) -> WienerIncrement,
        O: FnMut(usize, f64, &SpectralField),
    {
        let steps = self.config.steps();
        let dt = self.config.dt;
        let mut u = self.u0.clone();
        observe(0, 0.0, &u);
        for s in 0..steps {
            let dw = incr(s as u64);
            u = self.stepper.step(&u, &dw).map_err(|e| Error::Step { index: s, source: alloc::boxed::Box::new(e) })?;
            observe(s + 1, (s + 1) as f64 * dt, &u);
        }
        Ok(u)
    }

    pub fn run_path_observed<O>(&mut self, path_id: u64, observe: O) -> Result<SpectralField>
    where
        O: FnMut(usize, f64, &SpectralField),
    {
        let incr = self.increments(path_id);
        self.run_with(incr, observe)
    }

    pub fn run_path(&mut self, path_id: u64) -> Result<PathResult> {
        let save_every = self.config.save_every;
        let steps = self.config.steps();
        let mut res = PathResult {
            path_id,
            dt: self.config.dt,
            save_every,
            times: Vec::new(),
            states: Vec::new(),
            l2: Vec::with_capacity(steps + 1),
            h1: Vec::with_capacity(steps + 1),
        };
        self.run_path_observed(path_id, |s, t, u| {
            res.l2.push(u.l2_norm_sq());
            res.h1.push(u.h1_norm_sq());
            if s % save_every == 0 || s == steps {
                res.times.push(t);
                res.states.push(u.clone());
            }
        })?;
        Ok(res)
    }

    /// Norms and probe values of one path at the save times.
    pub fn summarize_path(&mut self, path_id: u64, probe: &ProbeForms) -> Result<PathSummary> {
        let save_every = self.config.save_every;
        let steps = self.config.steps();
        let mut probe = MartingaleProbe::new(probe.clone());
        let mut out = PathSummary::default();
        let mut l2_0 = None;
        self.run_path_observed(path_id, |s, t, u| {
            let sample = probe.push(t, u);
            let l2 = u.l2_norm_sq();
            let x0 = *l2_0.get_or_insert(l2);
            out.max_l2_drift = out.max_l2_drift.max(if x0 == 0.0 { (l2 - x0).abs() } else { (l2 - x0).abs() / x0 });
            if s % save_every == 0 || s == steps {
                out.times.push(t);
                out.l2.push(l2);
                out.h1.push(u.h1_norm_sq());
                out.m.push(sample.m);
                out.qv.push(sample.qv);
                out.l.push(sample.l);
            }
        })?;
        Ok(out)
    }
}

pub fn run_path(config: &SimConfig, path_id: u64) -> Result<PathResult> {
    Simulator::new(config)?.run_path(path_id)
}

/// What an ensemble keeps of one path, at the save times.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathSummary {
    pub times: Vec<f64>,
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
    pub m: Vec<f64>,
    pub qv: Vec<f64>,
    pub l: Vec<Complex64>,
    /// Largest relative `‖u‖₀²` drift over all steps.
    pub max_l2_drift: f64,
}

/// Default test field of ensemble runs: reads off the `𝔰_{(1,0)}` coefficient.
pub fn default_probe(trunc: TruncationSet) -> SpectralField {
    coefficient_probe(trunc, BasisMode::s(1, 0))
}

/// Per-time ensemble statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnsembleDiagnostics {
    pub paths: usize,
    pub times: Vec<f64>,
    pub mean_l2: Vec<f64>,
    pub se_l2: Vec<f64>,
    pub mean_h1: Vec<f64>,
    pub se_h1: Vec<f64>,
    pub envelope_h1: Vec<f64>,
    pub mean_m: Vec<f64>,
    pub se_m: Vec<f64>,
    pub qv_gap: Vec<f64>,
    pub se_qv: Vec<f64>,
    pub mean_l_re: Vec<f64>,
    pub se_l_re: Vec<f64>,
    pub mean_l_im: Vec<f64>,
    pub se_l_im: Vec<f64>,
    pub max_l2_drift: f64,
}

impl EnsembleDiagnostics {
    /// Aggregates summaries listed in path-id order. `h1_0` and `growth_rate`
    /// set the envelope `‖u_0‖₁² e^{Ct}`.
    pub fn from_summaries(summaries: &[PathSummary], h1_0: f64, growth_rate: f64) -> Self {
        let Some(first) = summaries.first() else { return Self::default() };
        let len = first.times.len();
        let mut d = Self { paths: summaries.len(), times: first.times.clone(), ..Self::default() };
        for i in 0..len {
            let stat = |f: &dyn Fn(&PathSummary) -> f64| summaries.iter().map(f).collect::<RunningStats>();
            let l2 = stat(&|p| p.l2[i]);
            let h1 = stat(&|p| p.h1[i]);
            let m = stat(&|p| p.m[i]);
            let gap = stat(&|p| p.m[i] * p.m[i] - p.qv[i]);
            let lre = stat(&|p| p.l[i].re - p.l[0].re);
            let lim = stat(&|p| p.l[i].im - p.l[0].im);
            d.mean_l2.push(l2.mean());
            d.se_l2.push(l2.std_err());
            d.mean_h1.push(h1.mean());
            d.se_h1.push(h1.std_err());
            d.envelope_h1.push(h1_envelope(h1_0, growth_rate, d.times[i]));
            d.mean_m.push(m.mean());
            d.se_m.push(m.std_err());
            d.qv_gap.push(gap.mean());
            d.se_qv.push(gap.std_err());
            d.mean_l_re.push(lre.mean());
            d.se_l_re.push(lre.std_err());
            d.mean_l_im.push(lim.mean());
            d.se_l_im.push(lim.std_err());
        }
        d.max_l2_drift = summaries.iter().fold(0.0, |a, p| a.max(p.max_l2_drift));
        d
    }
}

/// Runs the listed path ids one after another.
pub fn run_ensemble_ids(config: &SimConfig, ids: &[u64], probe: &SpectralField) -> Result<EnsembleDiagnostics> {
    if ids.len() < 2 {
        return Err(Error::TooFewPaths { needed: 2, got: ids.len() });
    }
    let mut sim = Simulator::new(config)?;
    let forms = ProbeForms::new(probe, &config.noise);
    let summaries = ids.iter().map(|&id| sim.summarize_path(id, &forms)).collect::<Result<Vec<_>>>()?;
    Ok(EnsembleDiagnostics::from_summaries(&summaries, sim.initial().h1_norm_sq(), config.noise.growth_rate()))
}

/// Runs paths `0..config.paths` sequentially with the default probe.
pub fn run_ensemble(config: &SimConfig) -> Result<EnsembleDiagnostics> {
    let ids: Vec<u64> = (0..config.paths as u64).collect();
    run_ensemble_ids(config, &ids, &default_probe(config.trunc()))
}

/// Relative `‖u‖₀²` drift of a norm series; re-exported for reports.
pub fn l2_drift(path: &PathResult) -> f64 {
    relative_drift(&path.l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn config(scheme: Scheme, noise: NoiseModel) -> SimConfig {
        SimConfig { n: 3, dt: 0.01, t_end: 0.1, scheme, noise, paths: 4, seed: 5, initial: InitialCondition::Pair, save_every: 1 }
    }

    #[test]
    fn zero_state_stays_zero() {
        let t = TruncationSet::new(3);
        let model = NoiseModel::q_wiener(2, 4.0).unwrap();
        let dw = NoiseStream::new(1, 1).increment(&model, 0.01, 0);
        for scheme in [Scheme::ItoEulerMaruyama, Scheme::StratHeun, Scheme::StratImplicitMidpoint] {
            let x = step(scheme, &SpectralField::zeros(t), &dw, &model).unwrap();
            assert_eq!(x.max_abs(), 0.0);
        }
    }

    #[test]
    fn euler_maruyama_single_mode() {
        let t = TruncationSet::new(2);
        let u = SpectralField::single(t, BasisMode::c(1, 0), 1.0);
        let dw = WienerIncrement { dt: 0.01, db: vec![0.03, -0.02] };
        let x = step(Scheme::ItoEulerMaruyama, &u, &dw, &NoiseModel::space_independent()).unwrap();
        let expected =
            SpectralField::from_modes(t, &[(BasisMode::c(1, 0), 1.0 - 0.005), (BasisMode::s(1, 0), -0.03)]).unwrap();
        assert!(x.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn midpoint_conserves_energy() {
        let t = TruncationSet::new(4);
        let u = InitialCondition::Random { decay: 1.0 }.build(t, 3).unwrap();
        for model in [NoiseModel::space_independent(), NoiseModel::q_wiener(4, 4.0).unwrap()] {
            let dw = NoiseStream::new(2, 0).increment(&model, 1e-3, 0);
            let x = step(Scheme::StratImplicitMidpoint, &u, &dw, &model).unwrap();
            let e0 = u.l2_norm_sq();
            assert!((x.l2_norm_sq() - e0).abs() <= 1e-10 * e0);
            assert!(x.max_abs_diff(&u) > 1e-4);
        }
    }

    #[test]
    fn midpoint_reports_non_convergence() {
        let t = TruncationSet::new(3);
        let u = InitialCondition::Random { decay: 0.0 }.build(t, 1).unwrap();
        let model = NoiseModel::space_independent();
        let mut s = Stepper::new(Scheme::StratImplicitMidpoint, t, &model).unwrap();
        s.set_tolerance(1e-30, 2);
        let err = s.step(&u, &WienerIncrement { dt: 0.1, db: vec![0.0, 0.0] }).unwrap_err();
        assert!(matches!(err, Error::MidpointNotConverged { iterations: 2, .. }));
    }

    #[test]
    fn one_step_path() {
        let mut c = config(Scheme::StratHeun, NoiseModel::space_independent());
        c.t_end = c.dt;
        let p = run_path(&c, 0).unwrap();
        assert_eq!(p.l2.len(), 2);
        assert_eq!(p.times, vec![0.0, c.dt]);
    }

    #[test]
    fn paths_are_deterministic() {
        let c = config(Scheme::StratImplicitMidpoint, NoiseModel::q_wiener(2, 4.0).unwrap());
        assert_eq!(run_path(&c, 3).unwrap(), run_path(&c, 3).unwrap());
        assert_ne!(run_path(&c, 3).unwrap(), run_path(&c, 4).unwrap());
    }

    #[test]
    fn steady_mode_without_noise_is_constant() {
        let mut c = config(Scheme::StratHeun, NoiseModel::zero());
        c.n = 1;
        c.initial = InitialCondition::Mode(BasisMode::c(1, 0));
        let p = run_path(&c, 0).unwrap();
        for s in &p.states {
            assert!(s.max_abs_diff(&p.states[0]) < 1e-15);
        }
    }

    #[test]
    fn identical_paths_have_zero_variance() {
        let c = config(Scheme::StratImplicitMidpoint, NoiseModel::space_independent());
        let d = run_ensemble_ids(&c, &[1, 1], &default_probe(c.trunc())).unwrap();
        assert!(d.se_l2.iter().chain(&d.se_h1).all(|&s| s == 0.0));
        assert_eq!(run_ensemble_ids(&c, &[1], &default_probe(c.trunc())).unwrap_err(), Error::TooFewPaths { needed: 2, got: 1 });
    }

    #[test]
    fn config_validation_lists_everything() {
        let mut c = SimConfig::desk();
        c.dt = -1.0;
        c.paths = 0;
        c.save_every = 0;
        match c.validate().unwrap_err() {
            Error::InvalidConfig(v) => assert_eq!(v.len(), 3, "{v:?}"),
            e => panic!("{e:?}"),
        }
        assert!(SimConfig::desk().validate().is_ok());
        assert_eq!(SimConfig::desk().steps(), 1000);
    }

    #[test]
    fn random_initial_condition_is_seeded() {
        let t = TruncationSet::new(4);
        let ic = InitialCondition::Random { decay: 3.0 };
        let a = ic.build(t, 1).unwrap();
        assert_eq!(a, ic.build(t, 1).unwrap());
        assert_ne!(a, ic.build(t, 2).unwrap());
        assert_eq!(a.coeffs()[0], 0.0);
        assert_abs_diff_eq!(crate::basis::divergence_max(&a), 0.0, epsilon = 1e-12);
    }
}
