//! Single-file experiment configuration.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csi::RadioConfig;
use crate::domain::FeatureRangeTable;
use crate::error::{Error, Result};
use crate::features::WindowConfig;
use crate::inverse::{ModelConfig, TrainConfig};
use crate::simulator::SimConfig;

/// Sizes and protocol settings of the evaluation experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub n_sequences: usize,
    /// Share of sequences held out for testing.
    pub test_fraction: f64,
    pub rates_hz: Vec<f64>,
    /// Sequences simulated per rate in the packet-rate sweep.
    pub sweep_sequences: usize,
    pub latency_samples: usize,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            n_sequences: 2000,
            test_fraction: 0.2,
            rates_hz: vec![100.0, 200.0, 500.0, 1000.0],
            sweep_sequences: 600,
            latency_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub radio: RadioConfig,
    pub sim: SimConfig,
    pub windows: WindowConfig,
    pub ranges: FeatureRangeTable,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub experiment: ExperimentParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            radio: RadioConfig::calibrated(),
            sim: SimConfig::default(),
            windows: WindowConfig::default(),
            ranges: FeatureRangeTable::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            experiment: ExperimentParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        self.sim.validate()?;
        self.windows.validate()?;
        self.ranges.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        let room = &self.sim.room;
        if room.tx_pos != self.radio.tx_pos || room.rx_pos != self.radio.rx_pos {
            return Err(Error::config("room tx/rx positions differ from the radio link"));
        }
        if self.radio.sample_rate_hz != self.sim.sample_rate_hz {
            return Err(Error::config(format!(
                "radio packet rate {} Hz differs from simulator rate {} Hz",
                self.radio.sample_rate_hz, self.sim.sample_rate_hz
            )));
        }
        let e = &self.experiment;
        if e.n_sequences < 4 || e.sweep_sequences < 4 {
            return Err(Error::config("experiments need at least four sequences"));
        }
        if !(e.test_fraction > 0.0 && e.test_fraction < 0.5) {
            return Err(Error::config("test_fraction must be in (0, 0.5)"));
        }
        if e.rates_hz.is_empty() || e.rates_hz.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::config("rates_hz must be a non-empty list of positive rates"));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of every section, as hex.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.fingerprint(), c.fingerprint());
        assert_eq!(c.fingerprint().len(), 64);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml_str("seed = 7\n[model]\nstate_hidden = 128\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.model.state_hidden, 128);
        assert_eq!(c.model.traj_hidden, 128);
    }

    #[test]
    fn fingerprint_tracks_every_section() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.train.learning_rate = 1e-3;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn rejects_inconsistent_or_unknown() {
        assert!(ExperimentConfig::from_toml_str("sed = 1").unwrap_err().is_config());
        let mut c = ExperimentConfig::default();
        c.radio.rx_pos.x = 5.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.sim.sample_rate_hz = 200.0;
        assert!(c.validate().is_err());
    }
}
