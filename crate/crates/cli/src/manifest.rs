//! The JSON record written next to every output. Replaying it with
//! `steuler replay` regenerates the same files.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use steuler_core::noise::NoiseModel;

use crate::config::Settings;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub regime: String,
    pub entries: usize,
    pub cw: f64,
    pub cw_prime: f64,
    pub growth_rate: f64,
}

impl NoiseSummary {
    pub fn new(settings: &Settings, model: &NoiseModel) -> Self {
        Self {
            regime: settings.noise.to_string(),
            entries: model.entries().len(),
            cw: model.cw(),
            cw_prime: model.cw_prime(),
            growth_rate: model.growth_rate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// `run` or `ensemble`.
    pub command: String,
    /// Path id for `run`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_id: Option<u64>,
    pub settings: Settings,
    pub noise: NoiseSummary,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub started_unix: u64,
    pub wall_seconds: f64,
}

/// Wall-clock bookkeeping for a manifest.
pub struct Clock {
    started_unix: u64,
    start: Instant,
}

impl Clock {
    pub fn start() -> Self {
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self { started_unix, start: Instant::now() }
    }

    pub fn finish(
        &self,
        command: &str,
        path_id: Option<u64>,
        settings: &Settings,
        model: &NoiseModel,
        outputs: Vec<PathBuf>,
    ) -> RunManifest {
        RunManifest {
            command: command.into(),
            path_id,
            settings: settings.clone(),
            noise: NoiseSummary::new(settings, model),
            outputs,
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix: self.started_unix,
            wall_seconds: self.start.elapsed().as_secs_f64(),
        }
    }
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
