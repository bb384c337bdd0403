//! Engine configuration, read from `key = value` files with dotted keys
//! (`ingest.period_ms = 10000`, `physio.lf_band = [0.04, 0.15]`).
//!
//! Every key is optional; missing keys take the module defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity_fca::ActivityConfig;
use crate::ema::EmaConfig;
use crate::estimator::EstimatorConfig;
use crate::ingest::IngestConfig;
use crate::navigator::NavigatorConfig;
use crate::physio::PhysioConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config value for {key}: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub ingest: IngestConfig,
    pub physio: PhysioConfig,
    pub activity: ActivityConfig,
    pub ema: EmaConfig,
    pub estimator: EstimatorConfig,
    pub navigator: NavigatorConfig,
}

impl Config {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.ingest.period_ms < 10 {
            return Err(ConfigError::Invalid {
                key: "ingest.period_ms",
                reason: "must be at least 10".into(),
            });
        }
        if self.ingest.gap_factor <= 0.0 {
            return Err(ConfigError::Invalid {
                key: "ingest.gap_factor",
                reason: "must be positive".into(),
            });
        }
        let [lf_lo, lf_hi] = self.physio.lf_band;
        let [hf_lo, hf_hi] = self.physio.hf_band;
        if !(0.0 < lf_lo && lf_lo < lf_hi && lf_hi <= hf_lo && hf_lo < hf_hi) {
            return Err(ConfigError::Invalid {
                key: "physio.lf_band",
                reason: "bands must be ordered and non-overlapping".into(),
            });
        }
        if self.navigator.grid < 2 {
            return Err(ConfigError::Invalid {
                key: "navigator.grid",
                reason: "grid resolution must be at least 2".into(),
            });
        }
        Ok(())
    }
}
