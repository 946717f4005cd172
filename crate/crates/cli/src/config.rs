//! Run settings: a TOML file, command-line overrides and defaults, resolved
//! into one validated [`Settings`].
//!
//! ```toml
//! n = 8
//! dt = 1e-3
//! T = 1.0
//! paths = 256
//! seed = 0
//! scheme = "strat-midpoint"      # ito-em | strat-heun | strat-midpoint
//! noise = "space-independent"    # | "finite:1,0;0,1" | "qwiener:8" | "none"
//! beta = 4.0
//! ic = "pair"                    # | "mode:1,0" | "mode:s:1,1" | "random:3"
//! out = "out"
//! save-every = 10
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use steuler_core::basis::{BasisMode, ModeIndex, ModeKind};
use steuler_core::integrate::{InitialCondition, Scheme, SimConfig};
use steuler_core::noise::NoiseModel;

pub const OUT_ENV: &str = "STEULER_OUT";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid settings:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

/// Keys accepted in a config file; every one is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub n: Option<usize>,
    pub dt: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub scheme: Option<String>,
    pub noise: Option<String>,
    pub beta: Option<f64>,
    pub ic: Option<String>,
    pub out: Option<PathBuf>,
    pub save_every: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })
    }
}

/// Command-line flags shared by the run-type subcommands. Flags win over the
/// file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Truncation order: modes with max(|k1|, |k2|) <= n.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Time horizon.
    #[arg(long = "T", value_name = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// ito-em | strat-heun | strat-midpoint
    #[arg(long)]
    pub scheme: Option<String>,
    /// space-independent | finite:<k1,k2;...> | qwiener:<n_W> | none
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// pair | mode:[c:|s:]<k1,k2> | random:<decay>
    #[arg(long)]
    pub ic: Option<String>,
    /// Output directory [default: $STEULER_OUT, else ./out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep every this many steps in saved series.
    #[arg(long)]
    pub save_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct SchemeName(pub Scheme);

impl FromStr for SchemeName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(SchemeName(match s {
            "ito-em" => Scheme::ItoEulerMaruyama,
            "strat-heun" => Scheme::StratHeun,
            "strat-midpoint" => Scheme::StratImplicitMidpoint,
            _ => return Err(format!("unknown scheme '{s}' (expected ito-em, strat-heun or strat-midpoint)")),
        }))
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0.name())
    }
}

/// Noise regime as written on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum NoiseSpec {
    SpaceIndependent,
    Finite(Vec<(i32, i32)>),
    QWiener(usize),
    None,
}

impl NoiseSpec {
    /// Builds the model; `beta` is ignored by the space-independent and
    /// empty regimes.
    pub fn model(&self, beta: f64) -> steuler_core::Result<NoiseModel> {
        match self {
            NoiseSpec::SpaceIndependent => Ok(NoiseModel::space_independent()),
            NoiseSpec::None => Ok(NoiseModel::zero()),
            NoiseSpec::QWiener(n_w) => NoiseModel::q_wiener(*n_w, beta),
            NoiseSpec::Finite(ks) => {
                let ks: Vec<ModeIndex> = ks.iter().map(|&(a, b)| ModeIndex::new(a, b)).collect();
                NoiseModel::finite_modes(&ks, beta)
            }
        }
    }
}

fn parse_pair(s: &str) -> Result<(i32, i32), String> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')');
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected a wavevector 'k1,k2', got '{s}'"))?;
    let p = |x: &str| x.trim().parse::<i32>().map_err(|e| format!("bad wavevector component '{x}': {e}"));
    Ok((p(a)?, p(b)?))
}

impl FromStr for NoiseSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "space-independent" => Ok(NoiseSpec::SpaceIndependent),
            None if s == "none" => Ok(NoiseSpec::None),
            Some(("qwiener", n)) => {
                n.trim().parse().map(NoiseSpec::QWiener).map_err(|e| format!("bad n_W '{n}' in noise spec: {e}"))
            }
            Some(("finite", list)) => {
                let ks = list.split(';').filter(|p| !p.trim().is_empty()).map(parse_pair).collect::<Result<Vec<_>, _>>()?;
                Ok(NoiseSpec::Finite(ks))
            }
            _ => Err(format!(
                "unknown noise '{s}' (expected space-independent, finite:<k1,k2;...>, qwiener:<n_W> or none)"
            )),
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::SpaceIndependent => f.write_str("space-independent"),
            NoiseSpec::None => f.write_str("none"),
            NoiseSpec::QWiener(n) => write!(f, "qwiener:{n}"),
            NoiseSpec::Finite(ks) => {
                let parts: Vec<String> = ks.iter().map(|(a, b)| format!("{a},{b}")).collect();
                write!(f, "finite:{}", parts.join(";"))
            }
        }
    }
}

/// Initial condition as written on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum IcSpec {
    Pair,
    Mode(BasisMode),
    Random(f64),
}

impl IcSpec {
    pub fn initial_condition(&self) -> InitialCondition {
        match *self {
            IcSpec::Pair => InitialCondition::Pair,
            IcSpec::Mode(m) => InitialCondition::Mode(m),
            IcSpec::Random(decay) => InitialCondition::Random { decay },
        }
    }
}

impl FromStr for IcSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "pair" => Ok(IcSpec::Pair),
            Some(("mode", rest)) => {
                let (kind, k) = match rest.split_once(':') {
                    Some(("c", k)) => (ModeKind::C, k),
                    Some(("s", k)) => (ModeKind::S, k),
                    Some((other, _)) => return Err(format!("unknown mode kind '{other}' (expected c or s)")),
                    None => (ModeKind::C, rest),
                };
                let (a, b) = parse_pair(k)?;
                Ok(IcSpec::Mode(BasisMode::new(kind, ModeIndex::new(a, b))))
            }
            Some(("random", d)) => {
                d.trim().parse().map(IcSpec::Random).map_err(|e| format!("bad decay '{d}' in initial condition: {e}"))
            }
            _ => Err(format!("unknown initial condition '{s}' (expected pair, mode:<k1,k2> or random:<decay>)")),
        }
    }
}

impl fmt::Display for IcSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IcSpec::Pair => f.write_str("pair"),
            IcSpec::Mode(m) => {
                let kind = if m.kind == ModeKind::C { 'c' } else { 's' };
                write!(f, "mode:{kind}:{},{}", m.index.k1, m.index.k2)
            }
            IcSpec::Random(d) => write!(f, "random:{d}"),
        }
    }
}

macro_rules! string_serde {
    ($($t:ty),*) => {$(
        impl From<$t> for String {
            fn from(v: $t) -> String {
                v.to_string()
            }
        }
        impl TryFrom<String> for $t {
            type Error = String;
            fn try_from(s: String) -> Result<Self, String> {
                s.parse()
            }
        }
    )*};
}
string_serde!(SchemeName, NoiseSpec, IcSpec);

/// Fully resolved and validated settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Settings {
    pub n: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub paths: usize,
    pub seed: u64,
    pub scheme: SchemeName,
    pub noise: NoiseSpec,
    pub beta: f64,
    pub ic: IcSpec,
    pub out: PathBuf,
    pub save_every: usize,
}

impl Settings {
    pub fn defaults() -> Self {
        Self {
            n: 8,
            dt: 1e-3,
            t: 1.0,
            paths: 256,
            seed: 0,
            scheme: SchemeName(Scheme::StratImplicitMidpoint),
            noise: NoiseSpec::SpaceIndependent,
            beta: 4.0,
            ic: IcSpec::Pair,
            out: PathBuf::from("out"),
            save_every: 10,
        }
    }

    /// Builds the simulation config, including the noise normalizers.
    pub fn sim_config(&self) -> anyhow::Result<SimConfig> {
        Ok(SimConfig {
            n: self.n,
            dt: self.dt,
            t_end: self.t,
            scheme: self.scheme.0,
            noise: self.noise.model(self.beta)?,
            paths: self.paths,
            seed: self.seed,
            initial: self.ic.initial_condition(),
            save_every: self.save_every,
        })
    }

    /// Every violated constraint, in a fixed order.
    pub fn problems(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.beta.is_nan() || self.beta <= 3.0 {
            errs.push(format!(
                "beta = {} is not allowed: the noise covariance needs beta > 3 for c'_W to be finite",
                self.beta
            ));
        }
        match &self.noise {
            NoiseSpec::QWiener(0) => errs.push("qwiener:<n_W> needs n_W >= 1".into()),
            NoiseSpec::Finite(ks) if ks.is_empty() => errs.push("finite noise needs at least one wavevector".into()),
            NoiseSpec::Finite(ks) if ks.contains(&(0, 0)) => {
                errs.push("finite noise wavevectors must be nonzero; use space-independent for k = 0".into())
            }
            _ => {}
        }
        if let IcSpec::Mode(m) = self.ic {
            if m.index.max_abs() > self.n {
                errs.push(format!("initial mode {m} lies outside the truncation n = {}", self.n));
            }
        }
        // the remaining checks do not need the noise model
        let probe = SimConfig {
            n: self.n,
            dt: self.dt,
            t_end: self.t,
            scheme: self.scheme.0,
            noise: NoiseModel::zero(),
            paths: self.paths,
            seed: self.seed,
            initial: self.ic.initial_condition(),
            save_every: self.save_every,
        };
        if let Err(steuler_core::Error::InvalidConfig(more)) = probe.validate() {
            errs.extend(more);
        }
        errs
    }
}

/// Defaults, then the file, then `$STEULER_OUT` for the output directory if
/// neither set it, then the flags.
pub fn resolve(overrides: &Overrides) -> Result<Settings, ConfigError> {
    let file = match &overrides.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    resolve_with(&file, overrides, std::env::var_os(OUT_ENV).map(PathBuf::from))
}

pub fn resolve_with(file: &FileConfig, o: &Overrides, env_out: Option<PathBuf>) -> Result<Settings, ConfigError> {
    let mut s = Settings::defaults();
    let mut errs = Vec::new();

    macro_rules! take {
        ($field:ident, $src:ident) => {
            if let Some(v) = $src.$field.clone() {
                s.$field = v;
            }
        };
    }
    macro_rules! parsed {
        ($field:ident, $src:ident) => {
            if let Some(v) = &$src.$field {
                match v.parse() {
                    Ok(x) => s.$field = x,
                    Err(e) => errs.push(e),
                }
            }
        };
    }

    take!(n, file);
    take!(dt, file);
    take!(t, file);
    take!(paths, file);
    take!(seed, file);
    take!(beta, file);
    take!(save_every, file);
    parsed!(scheme, file);
    parsed!(noise, file);
    parsed!(ic, file);
    match (&file.out, env_out) {
        (Some(p), _) => s.out = p.clone(),
        (None, Some(p)) => s.out = p,
        _ => {}
    }

    take!(n, o);
    take!(dt, o);
    take!(t, o);
    take!(paths, o);
    take!(seed, o);
    take!(beta, o);
    take!(save_every, o);
    take!(out, o);
    parsed!(scheme, o);
    parsed!(noise, o);
    parsed!(ic, o);

    errs.extend(s.problems());
    if errs.is_empty() {
        Ok(s)
    } else {
        Err(ConfigError::Invalid(errs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> FileConfig {
        FileConfig::parse(text, Path::new("test.toml")).unwrap()
    }

    #[test]
    fn empty_config_gives_defaults() {
        let s = resolve_with(&parse(""), &Overrides::default(), None).unwrap();
        assert_eq!(s, Settings::defaults());
    }

    #[test]
    fn flags_override_file() {
        let file = parse("paths = 256\nnoise = \"qwiener:4\"\n");
        let o = Overrides { paths: Some(1024), ..Default::default() };
        let s = resolve_with(&file, &o, None).unwrap();
        assert_eq!(s.paths, 1024);
        assert_eq!(s.noise, NoiseSpec::QWiener(4));
    }

    #[test]
    fn small_beta_is_rejected() {
        let o = Overrides { beta: Some(2.5), ..Default::default() };
        match resolve_with(&FileConfig::default(), &o, None).unwrap_err() {
            ConfigError::Invalid(v) => {
                assert_eq!(v.len(), 1);
                assert!(v[0].contains("beta > 3"), "{}", v[0]);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn every_problem_is_listed() {
        let file = parse("dt = -1.0\npaths = 0\nscheme = \"rk4\"\nbeta = 3.0\n");
        match resolve_with(&file, &Overrides::default(), None).unwrap_err() {
            ConfigError::Invalid(v) => assert_eq!(v.len(), 4, "{v:?}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let err = FileConfig::parse("n = 8\ndt = \n", Path::new("bad.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(FileConfig::parse("bogus = 1\n", Path::new("x.toml")).is_err());
    }

    #[test]
    fn env_sets_output_only_below_file() {
        let env = Some(PathBuf::from("/tmp/env"));
        let s = resolve_with(&FileConfig::default(), &Overrides::default(), env.clone()).unwrap();
        assert_eq!(s.out, PathBuf::from("/tmp/env"));
        let s = resolve_with(&parse("out = \"file\""), &Overrides::default(), env).unwrap();
        assert_eq!(s.out, PathBuf::from("file"));
    }

    #[test]
    fn specs_round_trip() {
        for text in ["space-independent", "none", "qwiener:8", "finite:1,0;0,-2"] {
            assert_eq!(text.parse::<NoiseSpec>().unwrap().to_string(), text);
        }
        for text in ["pair", "mode:c:1,0", "mode:s:2,-1", "random:3"] {
            assert_eq!(text.parse::<IcSpec>().unwrap().to_string(), text);
        }
        assert_eq!("mode:1,1".parse::<IcSpec>().unwrap(), IcSpec::Mode(BasisMode::c(1, 1)));
        assert!("qwiener:x".parse::<NoiseSpec>().is_err());
        let s = Settings::defaults();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<Settings>(&json).unwrap(), s);
    }
}
