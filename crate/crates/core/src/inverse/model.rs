//! Trained model container and inference.

use serde::{Deserialize, Serialize};

use super::data::{fill_chunk, FrameSeq, Normalizer};
use super::net::{argmax, softmax, Batch, Net, N_EVENTS};
use super::{Architecture, ModelConfig};
use crate::domain::RealEvent;
use crate::error::{Error, Result};
use crate::features::FeatureFrame;
use crate::geometry::Point2;

/// Frames per attention inference block, on top of the context overlap.
const ATTN_BLOCK: usize = 1024;
/// Windows per batched GRU inference call.
const GRU_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePrediction {
    pub ts: f64,
    pub event_probs: [f64; RealEvent::COUNT],
    /// Absent exactly when the most likely event is absence.
    pub pos: Option<Point2>,
    pub confidence: f64,
}

impl FramePrediction {
    fn from_outputs(ts: f64, logits: &[f64], pos: &[f64]) -> Self {
        let probs = softmax(logits);
        let k = argmax(&probs);
        let present = k != RealEvent::Absence.index();
        Self {
            ts,
            event_probs: probs,
            pos: present.then(|| Point2::new(pos[0], pos[1])),
            confidence: probs[k],
        }
    }

    pub fn event(&self) -> RealEvent {
        RealEvent::from_index(argmax(&self.event_probs)).expect("four classes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseModel {
    pub config: ModelConfig,
    pub normalizer: Normalizer,
    pub params: Vec<f64>,
}

/// Raw per-frame network outputs.
pub(crate) struct Outputs {
    pub logits: Vec<f64>,
    pub pos: Vec<f64>,
}

impl InverseModel {
    pub fn new(config: ModelConfig, normalizer: Normalizer, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        normalizer.validate()?;
        let want = config.n_params();
        if params.len() != want {
            return Err(Error::ModelFile(format!(
                "{} parameters for a configuration that needs {want}",
                params.len()
            )));
        }
        Ok(Self {
            config,
            normalizer,
            params,
        })
    }

    pub(crate) fn net(&self) -> Net {
        Net::new(&self.config)
    }

    /// Outputs for every frame, each computed from at most `context` frames
    /// ending at it.
    pub(crate) fn outputs(&self, seq: &FrameSeq) -> Outputs {
        let net = self.net();
        let n = seq.len();
        let c = self.config.context;
        let mut out = Outputs {
            logits: Vec::with_capacity(n * N_EVENTS),
            pos: Vec::with_capacity(n * 2),
        };
        match self.config.architecture {
            Architecture::SelfAttention => {
                let mut s = 0;
                while s < n {
                    let e = (s + ATTN_BLOCK).min(n);
                    let from = s.saturating_sub(c - 1);
                    let mut b = Batch::new(1, e - from);
                    fill_chunk(&mut b, 0, seq, from, e - from, &self.normalizer, &self.config.inputs, false);
                    let cache = net.forward(&self.params, &b);
                    let skip = s - from;
                    out.logits.extend_from_slice(&cache.logits[skip * N_EVENTS..]);
                    out.pos.extend_from_slice(&cache.pos[skip * 2..]);
                    s = e;
                }
            }
            Architecture::Recurrent => {
                let head = c.min(n);
                let mut b = Batch::new(1, head);
                fill_chunk(&mut b, 0, seq, 0, head, &self.normalizer, &self.config.inputs, false);
                let cache = net.forward(&self.params, &b);
                out.logits.extend_from_slice(&cache.logits);
                out.pos.extend_from_slice(&cache.pos);
                if n > head {
                    let mut b = Batch::new(1, n);
                    fill_chunk(&mut b, 0, seq, 0, n, &self.normalizer, &self.config.inputs, false);
                    let (lg, ps) = net.recurrent_windows(&self.params, &b.x, n, head, GRU_BLOCK);
                    out.logits.extend_from_slice(&lg);
                    out.pos.extend_from_slice(&ps);
                }
            }
        }
        out
    }

    /// Predictions for frames already spaced at the model hop. An input with
    /// no complete frame yields an empty result.
    pub fn infer(&self, features: &[FeatureFrame]) -> Vec<FramePrediction> {
        self.infer_frames(&FrameSeq::from_features(features))
    }

    pub fn infer_frames(&self, seq: &FrameSeq) -> Vec<FramePrediction> {
        if !(0..seq.len()).any(|i| seq.complete(i)) {
            log::warn!("no complete feature frame in {} input frames; nothing to predict", seq.len());
            return Vec::new();
        }
        let o = self.outputs(seq);
        (0..seq.len())
            .map(|i| FramePrediction::from_outputs(seq.ts[i], &o.logits[i * N_EVENTS..(i + 1) * N_EVENTS], &o.pos[i * 2..i * 2 + 2]))
            .collect()
    }

    /// Streaming form: the prediction for the last frame of `window`, using
    /// its trailing `context` frames.
    pub fn predict_latest(&self, window: &[FeatureFrame]) -> Option<FramePrediction> {
        let last = window.last()?;
        let from = window.len().saturating_sub(self.config.context);
        let seq = FrameSeq::from_features(&window[from..]);
        let net = self.net();
        let mut b = Batch::new(1, seq.len());
        fill_chunk(&mut b, 0, &seq, 0, seq.len(), &self.normalizer, &self.config.inputs, false);
        let cache = net.forward(&self.params, &b);
        let r = seq.len() - 1;
        Some(FramePrediction::from_outputs(
            last.ts,
            &cache.logits[r * N_EVENTS..(r + 1) * N_EVENTS],
            &cache.pos[r * 2..r * 2 + 2],
        ))
    }
}
