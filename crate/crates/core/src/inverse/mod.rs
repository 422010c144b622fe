//! The aggregated inverse model: feature sequences in, per-frame event
//! probabilities and positions out.
//!
//! A per-frame encoder (two dense layers of `state_hidden` units) feeds a
//! temporal block of width `traj_hidden` (causal self-attention over a
//! sliding window, or a GRU baseline), a feed-forward layer, and two heads:
//! a 4-way event classifier and a 2-D position regressor.

mod data;
mod gradcheck;
mod io;
mod linalg;
mod model;
mod net;
mod train;

use serde::{Deserialize, Serialize};

use crate::domain::N_SLOTS;
use crate::error::{Error, Result};

pub use data::{decimate, FrameSeq, Normalizer};
pub use gradcheck::{grad_check, loss_and_grad, random_batch};
pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use model::{FramePrediction, InverseModel};
pub use net::{Batch, LossStats};
pub use train::{split_indices, train, train_frames, EpochLog, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    SelfAttention,
    Recurrent,
}

/// Upper bounds on layer width and context length accepted by [`ModelConfig::validate`].
pub const MAX_WIDTH: usize = 1 << 14;
pub const MAX_CONTEXT: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub state_hidden: usize,
    pub traj_hidden: usize,
    /// Temporal context in frames.
    pub context: usize,
    pub n_heads_attn: usize,
    pub architecture: Architecture,
    pub seed: u64,
    /// Frame spacing the model runs at, seconds.
    pub hop_s: f64,
    /// Feature slots fed to the model; the others are zeroed.
    pub inputs: [bool; N_SLOTS],
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            state_hidden: 256,
            traj_hidden: 128,
            context: 32,
            n_heads_attn: 4,
            architecture: Architecture::SelfAttention,
            seed: 0,
            hop_s: 0.1,
            inputs: [true; N_SLOTS],
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.state_hidden == 0 || self.traj_hidden == 0 || self.n_heads_attn == 0 {
            return Err(Error::config("model dimensions must be positive"));
        }
        if self.context == 0 {
            return Err(Error::config("context must be at least one frame"));
        }
        if self.state_hidden.max(self.traj_hidden) > MAX_WIDTH || self.context > MAX_CONTEXT {
            return Err(Error::config(format!(
                "layer widths are limited to {MAX_WIDTH} and context to {MAX_CONTEXT} frames"
            )));
        }
        if self.n_heads_attn > self.traj_hidden {
            return Err(Error::config("more attention heads than trajectory units"));
        }
        if self.architecture == Architecture::SelfAttention && self.traj_hidden % self.n_heads_attn != 0 {
            return Err(Error::config(format!(
                "traj_hidden {} is not divisible by {} heads",
                self.traj_hidden, self.n_heads_attn
            )));
        }
        if !(self.hop_s > 0.0 && self.hop_s.is_finite()) {
            return Err(Error::config("hop_s must be positive"));
        }
        if !self.inputs.iter().any(|&b| b) {
            return Err(Error::config("at least one input slot must be enabled"));
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        net::Net::new(self).n_params
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Chunks of `context` frames per gradient step.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda_pos: f64,
    pub lambda_sta: f64,
    pub epochs: usize,
    pub val_fraction: f64,
    pub early_stop_patience: usize,
    pub optimizer: Optimizer,
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            learning_rate: 2e-3,
            lambda_pos: 1.0,
            lambda_sta: 1.0,
            epochs: 20,
            val_fraction: 0.1,
            early_stop_patience: 5,
            optimizer: Optimizer::Adam,
            clip_norm: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::config("batch_size and epochs must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if !(self.lambda_pos >= 0.0 && self.lambda_sta >= 0.0) {
            return Err(Error::config("loss weights must be non-negative"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 0.5) {
            return Err(Error::config("val_fraction must be in (0, 0.5)"));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::config("clip_norm must be positive"));
        }
        Ok(())
    }
}

/// The five named training settings. Setting 1 is the default.
pub fn setting(n: u8) -> Result<(ModelConfig, TrainConfig)> {
    let mut m = ModelConfig::default();
    let mut t = TrainConfig::default();
    match n {
        1 => {}
        2 => m.state_hidden = 128,
        3 => m.state_hidden = 512,
        4 => m.traj_hidden = 256,
        5 => {
            t.learning_rate = 1e-3;
            t.lambda_pos = 0.5;
            t.lambda_sta = 1.5;
        }
        _ => return Err(Error::config(format!("unknown setting {n}; expected 1 to 5"))),
    }
    Ok((m, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_table() {
        assert_eq!(setting(1).unwrap().0.state_hidden, 256);
        assert_eq!(setting(1).unwrap().0.traj_hidden, 128);
        assert_eq!(setting(2).unwrap().0.state_hidden, 128);
        assert_eq!(setting(3).unwrap().0.state_hidden, 512);
        assert_eq!(setting(4).unwrap().0.traj_hidden, 256);
        let (_, t5) = setting(5).unwrap();
        assert_eq!((t5.learning_rate, t5.lambda_pos, t5.lambda_sta), (1e-3, 0.5, 1.5));
        assert!(setting(6).is_err());
        for n in 1..=5 {
            let (m, t) = setting(n).unwrap();
            m.validate().unwrap();
            t.validate().unwrap();
            assert_eq!(t.batch_size, 128);
        }
    }

    #[test]
    fn config_validation() {
        let mut m = ModelConfig {
            traj_hidden: 10,
            n_heads_attn: 4,
            ..Default::default()
        };
        assert!(m.validate().is_err());
        m.architecture = Architecture::Recurrent;
        m.validate().unwrap();
        m.context = 0;
        assert!(m.validate().is_err());
        let t = TrainConfig {
            val_fraction: 0.5,
            ..Default::default()
        };
        assert!(t.validate().is_err());
    }

    #[test]
    fn config_toml_round_trip() {
        let m = ModelConfig {
            architecture: Architecture::Recurrent,
            inputs: [true, false, true, false, true],
            ..Default::default()
        };
        let s = toml::to_string(&m).unwrap();
        assert_eq!(toml::from_str::<ModelConfig>(&s).unwrap(), m);
        assert!(toml::from_str::<ModelConfig>("stat_hidden = 3").is_err());
    }
}
