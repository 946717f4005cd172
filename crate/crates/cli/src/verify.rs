//! The acceptance battery A1 to A9. Each criterion runs at full size or, with
//! `quick`, on a reduced ensemble; tolerances are the constants below and do
//! not change with `quick`.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use steuler_core::basis::{divergence_max, grid_size, leray_project, synthesize, BasisMode, SpectralField, TruncationSet};
use steuler_core::diagnostics::{coefficient_probe, qv_check, MartingaleProbe, MartingaleSample, ProbeForms};
use steuler_core::dynamics::{nonlinear_direct, nonlinear_pseudospectral, transport_apply, Advector, AdvectionTensor};
use steuler_core::geometry::{build_structure_tables, geodesic_drift, geodesic_noise_term};
use steuler_core::integrate::{random_field, InitialCondition, Scheme, SimConfig};
use steuler_core::noise::{normalizer_cw, normalizer_cw_prime, weighted_sum, NoiseModel, NoiseStream, WienerIncrement};
use steuler_core::stats::{slope, RunningStats};

use crate::ensemble;

/// A1: relative `L²` drift of the midpoint scheme over the horizon.
pub const MIDPOINT_L2_DRIFT: f64 = 1e-8;
/// A1: least empirical order of the Heun `L²` drift.
pub const HEUN_MIN_ORDER: f64 = 1.0;
/// A2, A3, A6, A7: width of the statistical band in standard errors.
pub const SE_BAND: f64 = 3.0;
/// A2: relative floor on the `H¹` band. The norm is conserved path by path
/// for space-independent noise, so the standard error is roundoff and a band
/// of pure standard errors would test roundoff against roundoff.
pub const H1_ROUNDOFF_FLOOR: f64 = 1e-9;
/// A4, A5: entrywise agreement of two evaluations of the same operator.
pub const ORACLE_TOL: f64 = 1e-10;
/// A6: discretization allowance on the bracket identity, in units of `dt`.
pub const QV_DT_ALLOWANCE: f64 = 2.0;
/// A7: discretization allowance between the two forms, in units of `dt`.
pub const ITO_STRAT_DT_ALLOWANCE: f64 = 5.0;
/// A8: orthogonality relations, relative to the product of the norms.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// A8: largest pointwise divergence.
pub const DIVERGENCE_TOL: f64 = 1e-10;
/// A9: change of `c_W`, `c′_W` between the two largest cutoffs.
pub const NORMALIZER_STABILITY: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    All,
    /// A1, A2
    Energy,
    /// A3
    Growth,
    /// A4, A8
    Oracle,
    /// A5
    Geometry,
    /// A6
    Martingale,
    /// A7
    Ito,
    /// A9
    Noise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Criterion {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
    A8,
    A9,
}

impl Criterion {
    pub const ALL: [Criterion; 9] = [
        Criterion::A1,
        Criterion::A2,
        Criterion::A3,
        Criterion::A4,
        Criterion::A5,
        Criterion::A6,
        Criterion::A7,
        Criterion::A8,
        Criterion::A9,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Criterion::A1 => "pathwise L2 conservation",
            Criterion::A2 => "constant mean H1 norm",
            Criterion::A3 => "H1 growth envelope",
            Criterion::A4 => "pseudo-spectral vs tensor advection",
            Criterion::A5 => "geodesic drift vs advection",
            Criterion::A6 => "martingale functionals",
            Criterion::A7 => "Ito vs Stratonovich forms",
            Criterion::A8 => "structural identities",
            Criterion::A9 => "noise normalizers",
        }
    }

    pub fn run(self, quick: bool) -> Outcome {
        let start = Instant::now();
        let (passed, detail) = match self {
            Criterion::A1 => a1(quick),
            Criterion::A2 => a2(quick),
            Criterion::A3 => a3(quick),
            Criterion::A4 => a4(quick),
            Criterion::A5 => a5(),
            Criterion::A6 => a6(quick),
            Criterion::A7 => a7(quick),
            Criterion::A8 => a8(quick),
            Criterion::A9 => a9(),
        }
        .unwrap_or_else(|e| (false, format!("error: {e:#}")));
        Outcome { criterion: self, passed, detail, seconds: start.elapsed().as_secs_f64() }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Suite {
    pub fn criteria(self) -> Vec<Criterion> {
        use Criterion::*;
        match self {
            Suite::All => Criterion::ALL.to_vec(),
            Suite::Energy => vec![A1, A2],
            Suite::Growth => vec![A3],
            Suite::Oracle => vec![A4, A8],
            Suite::Geometry => vec![A5],
            Suite::Martingale => vec![A6],
            Suite::Ito => vec![A7],
            Suite::Noise => vec![A9],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub criterion: Criterion,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<4} {:<36} {:>7.1}s  {}",
            self.criterion,
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion.title(),
            self.seconds,
            self.detail
        )
    }
}

type Check = anyhow::Result<(bool, String)>;

fn ids(count: usize) -> Vec<u64> {
    (0..count as u64).collect()
}

fn desk(scheme: Scheme, noise: NoiseModel) -> SimConfig {
    SimConfig { scheme, noise, ..SimConfig::desk() }
}

fn a1(quick: bool) -> Check {
    let paths = if quick { 8 } else { 32 };
    let config = desk(Scheme::StratImplicitMidpoint, NoiseModel::space_independent());
    let drifts = ensemble::map_paths(&config, &ids(paths), |sim, id| {
        let mut e0 = None;
        let mut worst = 0.0f64;
        sim.run_path_observed(id, |_, _, u| {
            let e = u.l2_norm_sq();
            let e0 = *e0.get_or_insert(e);
            worst = worst.max((e - e0).abs() / e0);
        })?;
        Ok(worst)
    })?;
    let midpoint = drifts.iter().cloned().fold(0.0, f64::max);

    // Heun at dt, dt/2, dt/4 on the same Brownian paths: coarse increments are
    // sums of the finest ones
    let heun_paths = if quick { 4 } else { 8 };
    let dts = [1e-3, 5e-4, 2.5e-4];
    let finest = dts[2];
    let mut means = Vec::new();
    for (j, &dt) in dts.iter().enumerate() {
        let config = SimConfig { dt, ..desk(Scheme::StratHeun, NoiseModel::space_independent()) };
        let per = 1u64 << (dts.len() - 1 - j);
        let d = ensemble::map_paths(&config, &ids(heun_paths), |sim, id| {
            let model = sim.config().noise.clone();
            let mut stream = NoiseStream::new(sim.config().seed, id);
            let incr = move |s: u64| {
                let parts: Vec<WienerIncrement> =
                    (0..per).map(|q| stream.increment(&model, finest, s * per + q)).collect();
                WienerIncrement::merge(&parts)
            };
            let e0 = sim.initial().l2_norm_sq();
            let u = sim.run_with(incr, |_, _, _| {})?;
            Ok((u.l2_norm_sq() - e0).abs())
        })?;
        means.push(d.iter().sum::<f64>() / d.len() as f64);
    }
    let x: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = means.iter().map(|d| d.ln()).collect();
    let order = slope(&x, &y);
    let passed = midpoint <= MIDPOINT_L2_DRIFT && order >= HEUN_MIN_ORDER;
    Ok((
        passed,
        format!(
            "midpoint max rel drift {midpoint:.2e} (<= {MIDPOINT_L2_DRIFT:.0e}, {paths} paths); heun mean drift {:.3e}/{:.3e}/{:.3e}, order {order:.3} (>= {HEUN_MIN_ORDER})",
            means[0], means[1], means[2]
        ),
    ))
}

fn a2(quick: bool) -> Check {
    let paths = if quick { 64 } else { 256 };
    let config = desk(Scheme::StratImplicitMidpoint, NoiseModel::space_independent());
    let d = ensemble::run(&SimConfig { paths, ..config })?;
    let h0 = d.mean_h1[0];
    let (mut worst, mut max_dev) = (0.0f64, 0.0f64);
    let mut passed = true;
    for i in 0..d.times.len() {
        let dev = (d.mean_h1[i] - h0).abs();
        let band = SE_BAND * d.se_h1[i] + H1_ROUNDOFF_FLOOR * h0;
        passed &= dev <= band;
        worst = worst.max(dev / band);
        max_dev = max_dev.max(dev);
    }
    let last = d.times.len() - 1;
    Ok((
        passed,
        format!(
            "{paths} paths, {} times; max |mean-H1_0| {max_dev:.1e}, worst ratio to band {worst:.3}; at T mean {:.10} vs {:.10}, se {:.1e}",
            d.times.len(),
            d.mean_h1[last],
            h0,
            d.se_h1[last]
        ),
    ))
}

fn a3(quick: bool) -> Check {
    let paths = if quick { 32 } else { 256 };
    let noise = NoiseModel::q_wiener(8, 4.0)?;
    let c = noise.growth_rate();
    let config = SimConfig { paths, ..desk(Scheme::StratImplicitMidpoint, noise) };
    let d = ensemble::run(&config)?;
    let mut passed = true;
    let mut margin = f64::INFINITY;
    for i in 0..d.times.len() {
        let room = d.envelope_h1[i] + SE_BAND * d.se_h1[i] - d.mean_h1[i];
        passed &= room >= 0.0;
        if i > 0 {
            margin = margin.min(room);
        }
    }
    let last = d.times.len() - 1;
    Ok((
        passed,
        format!(
            "qwiener:8 beta 4, C = {c:.6}, {paths} paths; at T mean {:.3} se {:.3} envelope {:.3}; least room for t > 0 {margin:.3}",
            d.mean_h1[last], d.se_h1[last], d.envelope_h1[last]
        ),
    ))
}

fn a4(quick: bool) -> Check {
    let fields = if quick { 20 } else { 100 };
    let mut worst = 0.0f64;
    for n in [2, 4, 6, 8] {
        let trunc = TruncationSet::new(n);
        let tensor = AdvectionTensor::build(trunc);
        for i in 0..fields {
            let u = random_field(trunc, 4, i as u64);
            let a = nonlinear_pseudospectral(&u)?;
            let b = nonlinear_direct(&u, &tensor)?;
            worst = worst.max(a.max_abs_diff(&b));
        }
    }
    Ok((worst <= ORACLE_TOL, format!("{fields} fields at n = 2, 4, 6, 8; max entry difference {worst:.2e}")))
}

fn a5() -> Check {
    let trunc = TruncationSet::new(4);
    let tables = build_structure_tables(trunc);
    let tensor = AdvectionTensor::build(trunc);
    // every pair of distinct modes with max(|k1|, |k2|) <= 2, so that all
    // products stay inside n = 4
    let inner: Vec<BasisMode> = trunc.modes().filter(|m| m.index.max_abs() <= 2).collect();
    let mut worst = 0.0f64;
    let mut count = 0;
    for (i, &a) in inner.iter().enumerate() {
        for (j, &b) in inner.iter().enumerate().skip(i + 1) {
            let (x, y) = (0.3 + 0.1 * (i % 7) as f64, -0.8 + 0.05 * (j % 11) as f64);
            let u = SpectralField::from_modes(trunc, &[(a, x), (b, y)])?;
            let g = geodesic_drift(&u, &tables)?;
            let mut b_u = nonlinear_direct(&u, &tensor)?;
            b_u.scale(-1.0);
            let want = leray_project(&synthesize(&b_u, grid_size(trunc.min_grid()))?, trunc)?;
            worst = worst.max(g.max_abs_diff(&want));
            for axis in 0..2 {
                let mut d = transport_apply(&u, Advector::Constant(if axis == 0 { [1.0, 0.0] } else { [0.0, 1.0] }));
                d.scale(-1.0);
                worst = worst.max(geodesic_noise_term(&u, axis, &tables)?.max_abs_diff(&d));
            }
            count += 1;
        }
    }
    Ok((
        worst <= ORACLE_TOL,
        format!("{count} two-mode fields at n = 4 (drift and both noise directions); max entry difference {worst:.2e}"),
    ))
}

fn a6(quick: bool) -> Check {
    let paths = if quick { 64 } else { 256 };

    // part 1: E[L_t − L_0] = 0 for three low-mode test fields
    let config = SimConfig { paths, ..desk(Scheme::StratImplicitMidpoint, NoiseModel::space_independent()) };
    let trunc = config.trunc();
    let two_pi2 = 2.0 * PI * PI;
    let tests = [
        coefficient_probe(trunc, BasisMode::s(1, 0)),
        coefficient_probe(trunc, BasisMode::c(1, 1)),
        SpectralField::from_modes(trunc, &[(BasisMode::c(0, 2), 1.0 / two_pi2), (BasisMode::s(1, -1), 0.5 / two_pi2)])?,
    ];
    let forms: Vec<ProbeForms> = tests.iter().map(|v| ProbeForms::new(v, &config.noise)).collect();
    let steps = config.steps();
    let checkpoints = [steps / 2, steps];
    let rows = ensemble::map_paths(&config, &ids(paths), |sim, id| {
        let mut probes: Vec<MartingaleProbe> = forms.iter().cloned().map(MartingaleProbe::new).collect();
        let mut out = Vec::new();
        let mut l0 = Vec::new();
        sim.run_path_observed(id, |s, t, u| {
            for (k, p) in probes.iter_mut().enumerate() {
                let l = p.push(t, u).l;
                if s == 0 {
                    l0.push(l);
                }
                if checkpoints.contains(&s) {
                    out.push(l - l0[k]);
                }
            }
        })?;
        Ok(out)
    })?;
    let mut l_ok = true;
    let mut worst_l = 0.0f64;
    for c in 0..rows[0].len() {
        let re: RunningStats = rows.iter().map(|r| r[c].re).collect();
        let im: RunningStats = rows.iter().map(|r| r[c].im).collect();
        for s in [re, im] {
            let z = s.mean().abs() / s.std_err();
            l_ok &= s.mean().abs() <= SE_BAND * s.std_err();
            worst_l = worst_l.max(z);
        }
    }

    // part 2: bracket identity on the one-mode reference: u_0 = C(1,0),
    // v = S(1,0)/‖S(1,0)‖², where E[M_1²] = (1 + (1 − e^{−2})/2)/2
    let ref_config = SimConfig {
        n: 2,
        paths,
        initial: InitialCondition::Mode(BasisMode::c(1, 0)),
        ..desk(Scheme::StratImplicitMidpoint, NoiseModel::space_independent())
    };
    let ref_forms = ProbeForms::new(&coefficient_probe(ref_config.trunc(), BasisMode::s(1, 0)), &ref_config.noise);
    let every = ref_config.steps() / 10;
    let series = ensemble::map_paths(&ref_config, &ids(paths), |sim, id| {
        let mut probe = MartingaleProbe::new(ref_forms.clone());
        let mut out: Vec<MartingaleSample> = Vec::new();
        sim.run_path_observed(id, |s, t, u| {
            let sample = probe.push(t, u);
            if s % every == 0 {
                out.push(sample);
            }
        })?;
        Ok(out)
    })?;
    let report = qv_check(&series)?;
    let dt = ref_config.dt;
    let mut qv_ok = true;
    let mut worst_m = 0.0f64;
    let mut worst_gap = 0.0f64;
    for r in report.iter().skip(1) {
        qv_ok &= r.mean_m.abs() <= SE_BAND * r.se_m;
        qv_ok &= r.gap.abs() <= SE_BAND * r.se_gap + QV_DT_ALLOWANCE * dt;
        worst_m = worst_m.max(r.mean_m.abs() / r.se_m);
        worst_gap = worst_gap.max(r.gap.abs() / (SE_BAND * r.se_gap + QV_DT_ALLOWANCE * dt));
    }
    let last = report.last().expect("ten checkpoints");
    let exact = 0.5 * (1.0 + 0.5 * (1.0 - (-2.0f64).exp()));
    Ok((
        l_ok && qv_ok,
        format!(
            "{paths} paths; L: worst |mean|/se {worst_l:.2} over 3 fields x 2 times x re/im; M: worst |mean|/se {worst_m:.2}, worst gap/band {worst_gap:.3}; E[M_1^2] {:.4} (exact {exact:.4}), E[QV_1] {:.4}",
            last.mean_m2, last.mean_qv
        ),
    ))
}

fn a7(quick: bool) -> Check {
    let paths = if quick { 32 } else { 256 };
    // pair scaled to unit energy, so the dt allowance is relative
    let a = 1.0 / (2.0 * PI);
    let initial = InitialCondition::Coefficients(vec![(BasisMode::c(1, 0), a), (BasisMode::c(1, 1), a)]);
    let mut stats = Vec::new();
    for scheme in [Scheme::ItoEulerMaruyama, Scheme::StratHeun] {
        let config = SimConfig { paths, initial: initial.clone(), ..desk(scheme, NoiseModel::space_independent()) };
        let finals =
            ensemble::map_paths(&config, &ids(paths), |sim, id| Ok(sim.run_path_observed(id, |_, _, _| {})?.l2_norm_sq()))?;
        stats.push(finals.into_iter().collect::<RunningStats>());
    }
    let dt = SimConfig::desk().dt;
    let diff = (stats[0].mean() - stats[1].mean()).abs();
    let se = (stats[0].std_err().powi(2) + stats[1].std_err().powi(2)).sqrt();
    let band = SE_BAND * se + ITO_STRAT_DT_ALLOWANCE * dt;
    Ok((
        diff <= band,
        format!(
            "{paths} paths each, |u_0|^2 = 1; mean |u(1)|^2 ito-em {:.6} strat-heun {:.6}; diff {diff:.2e} <= {band:.2e}",
            stats[0].mean(),
            stats[1].mean()
        ),
    ))
}

fn a8(quick: bool) -> Check {
    let fields = if quick { 20 } else { 100 };
    let trunc = TruncationSet::new(6);
    let (mut energy, mut enstrophy, mut transport, mut div) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..fields {
        let u = random_field(trunc, 8, i as u64);
        let b = nonlinear_pseudospectral(&u)?;
        energy = energy.max(b.inner(&u).abs() / (b.l2_norm_sq() * u.l2_norm_sq()).sqrt());
        enstrophy = enstrophy.max(b.h1_inner(&u).abs() / (b.h1_norm_sq() * u.h1_norm_sq()).sqrt());
        let a = random_field(TruncationSet::new(3), 9, i as u64);
        let t = transport_apply(&u, Advector::Field(&a));
        transport = transport.max(t.inner(&u).abs() / (t.l2_norm_sq() * u.l2_norm_sq()).sqrt());
        div = div.max(divergence_max(&u)).max(divergence_max(&b)).max(divergence_max(&t));
    }
    let passed = energy <= STRUCTURE_TOL && enstrophy <= STRUCTURE_TOL && transport <= STRUCTURE_TOL && div <= DIVERGENCE_TOL;
    Ok((
        passed,
        format!(
            "{fields} fields at n = 6; relative <B(u),u> {energy:.1e}, <grad B(u), grad u> {enstrophy:.1e}, <(a.grad)u,u> {transport:.1e}; max divergence {div:.1e}"
        ),
    ))
}

fn a9() -> Check {
    let beta = 4.0;
    let mut symmetric = true;
    let mut cutoff = 8;
    while cutoff <= 2048 {
        for p in [beta, beta - 1.0] {
            symmetric &= weighted_sum(p, cutoff, 0) == weighted_sum(p, cutoff, 1);
        }
        cutoff *= 2;
    }
    let cw = [normalizer_cw(beta, 1024)?, normalizer_cw(beta, 2048)?];
    let cwp = [normalizer_cw_prime(beta, 1024)?, normalizer_cw_prime(beta, 2048)?];
    let dcw = (cw[1].value() - cw[0].value()).abs();
    let dcwp = (cwp[1].value() - cwp[0].value()).abs();
    let passed = symmetric && dcw < NORMALIZER_STABILITY && dcwp < NORMALIZER_STABILITY;
    Ok((
        passed,
        format!(
            "axis symmetry exact at cutoffs 8..2048: {symmetric}; c_W = {:.12} (change {dcw:.1e}), c'_W = {:.12} (change {dcwp:.1e}) between cutoffs 1024 and 2048",
            cw[1].value(),
            cwp[1].value()
        ),
    ))
}

/// Runs the criteria of `suite` in order.
pub fn run_suite(suite: Suite, quick: bool, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    suite
        .criteria()
        .into_iter()
        .map(|c| {
            let o = c.run(quick);
            report(&o);
            o
        })
        .collect()
}
