use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cam::CamMethod;
use crate::error::{Error, Result};
use crate::trajectory::{DetectorConfig, DEFAULT_PHASE_BOUNDARY};

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "CSCORE_WORKERS";

/// Scoring and analysis settings; loadable from TOML, every field optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Gold-list threshold.
    pub tau: f64,
    /// Intensity-emphasis exponent.
    pub alpha: f64,
    pub methods: Vec<CamMethod>,
    /// Layer for the single-layer methods; first target layer when unset.
    pub layer: Option<String>,
    /// Layers aggregated by MS-GradCAM++, in order; all target layers when empty.
    pub ms_layers: Vec<String>,
    pub phase_boundary: u32,
    pub detectors: DetectorConfig,
    /// 0 means "let the thread pool decide".
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            alpha: 2.0,
            methods: CamMethod::ALL.to_vec(),
            layer: None,
            ms_layers: Vec::new(),
            phase_boundary: DEFAULT_PHASE_BOUNDARY,
            detectors: DetectorConfig::default(),
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::param("tau", format!("must lie in (0, 1), got {}", self.tau)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be > 0, got {}", self.alpha)));
        }
        if self.methods.is_empty() {
            return Err(Error::param("methods", "at least one method is required"));
        }
        if self.phase_boundary == 0 {
            return Err(Error::param("phase_boundary", "must be at least 1"));
        }
        let d = &self.detectors;
        if !(d.auc_floor >= 0.0 && d.auc_floor <= 1.0) {
            return Err(Error::param("auc_floor", format!("must lie in [0, 1], got {}", d.auc_floor)));
        }
        if !(d.drop_ratio > 0.0 && d.drop_ratio <= 1.0) {
            return Err(Error::param("drop_ratio", format!("must lie in (0, 1], got {}", d.drop_ratio)));
        }
        if !(d.floor >= 0.0 && d.floor <= 1.0) {
            return Err(Error::param("floor", format!("must lie in [0, 1], got {}", d.floor)));
        }
        if !(d.gap_min > 0.0 && d.gap_min <= 1.0) {
            return Err(Error::param("gap_min", format!("must lie in (0, 1], got {}", d.gap_min)));
        }
        Ok(())
    }

    /// Configured worker count, overridden by `CSCORE_WORKERS` when set.
    pub fn effective_workers(&self) -> Result<usize> {
        match std::env::var(WORKERS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::param("workers", format!("{WORKERS_ENV}=`{v}` is not a count"))),
            Err(_) => Ok(self.workers),
        }
    }
}
