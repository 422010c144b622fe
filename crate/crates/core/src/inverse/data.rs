//! Model-rate frame sequences, input normalization and batch assembly.

use serde::{Deserialize, Serialize};

use super::net::{Batch, N_IN};
use crate::domain::N_SLOTS;
use crate::error::{Error, Result};
use crate::features::FeatureFrame;
use crate::simulator::SequenceRecord;

/// Step indices kept when running a `f_s` sequence at `hop_s` frame spacing.
pub fn decimate(n: usize, f_s: f64, hop_s: f64) -> Vec<usize> {
    let stride = ((hop_s * f_s).round() as usize).max(1);
    (0..n).step_by(stride).collect()
}

/// A sequence at model frame rate, with labels when it comes from the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeq {
    pub ts: Vec<f64>,
    pub feats: Vec<[f64; N_SLOTS]>,
    pub label: Vec<u8>,
    pub pos: Vec<[f64; 2]>,
}

impl FrameSeq {
    pub fn from_record(rec: &SequenceRecord, hop_s: f64) -> Self {
        let idx = decimate(rec.len(), rec.f_s, hop_s);
        Self {
            ts: idx.iter().map(|&i| i as f64 / rec.f_s).collect(),
            feats: idx.iter().map(|&i| rec.feat[i]).collect(),
            label: idx.iter().map(|&i| rec.real[i].index() as u8).collect(),
            pos: idx.iter().map(|&i| [rec.pos[i].x, rec.pos[i].y]).collect(),
        }
    }

    /// Unlabelled frames, taken as already spaced at the model hop.
    pub fn from_features(frames: &[FeatureFrame]) -> Self {
        Self {
            ts: frames.iter().map(|f| f.ts).collect(),
            feats: frames.iter().map(|f| f.values).collect(),
            label: vec![0; frames.len()],
            pos: vec![[0.0; 2]; frames.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.feats.len()
    }

    pub fn frames(&self) -> Vec<FeatureFrame> {
        self.ts.iter().zip(&self.feats).map(|(&t, v)| FeatureFrame::new(t, *v)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.feats.is_empty()
    }

    /// True when every slot holds a value. Only complete frames are fed to
    /// the model and scored; the rest enter as zero rows.
    pub fn complete(&self, i: usize) -> bool {
        self.feats[i].iter().all(|v| !v.is_nan())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: [f64; N_SLOTS],
    pub std: [f64; N_SLOTS],
}

impl Default for Normalizer {
    fn default() -> Self {
        Self {
            mean: [0.0; N_SLOTS],
            std: [1.0; N_SLOTS],
        }
    }
}

impl Normalizer {
    /// Per-slot mean and standard deviation over complete frames.
    pub fn fit(seqs: &[FrameSeq]) -> Result<Self> {
        let mut sum = [0.0; N_SLOTS];
        let mut sq = [0.0; N_SLOTS];
        let mut n = 0usize;
        for s in seqs {
            for i in 0..s.len() {
                if !s.complete(i) {
                    continue;
                }
                n += 1;
                for k in 0..N_SLOTS {
                    sum[k] += s.feats[i][k];
                    sq[k] += s.feats[i][k] * s.feats[i][k];
                }
            }
        }
        if n < 2 {
            return Err(Error::Training("no complete feature frames to fit the normalizer".into()));
        }
        let mut out = Self::default();
        for k in 0..N_SLOTS {
            let m = sum[k] / n as f64;
            out.mean[k] = m;
            out.std[k] = (sq[k] / n as f64 - m * m).max(0.0).sqrt().max(1e-6);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mean.iter().all(|m| m.is_finite()) && self.std.iter().all(|s| *s > 0.0 && s.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::ModelFile("normalizer must be finite with positive spread".into()))
        }
    }

    pub fn encode(&self, v: &[f64; N_SLOTS], inputs: &[bool; N_SLOTS]) -> [f64; N_IN] {
        let mut out = [0.0; N_IN];
        if v.iter().any(|x| x.is_nan()) {
            return out;
        }
        for k in 0..N_SLOTS {
            if inputs[k] {
                out[k] = (v[k] - self.mean[k]) / self.std[k];
            }
        }
        out
    }
}

/// Copies frames `start..start + len` of `seq` into chunk `chunk` of `batch`.
pub(crate) fn fill_chunk(
    batch: &mut Batch,
    chunk: usize,
    seq: &FrameSeq,
    start: usize,
    len: usize,
    norm: &Normalizer,
    inputs: &[bool; N_SLOTS],
    labelled: bool,
) {
    debug_assert!(len <= batch.l);
    for k in 0..batch.l {
        let row = chunk * batch.l + k;
        let x = &mut batch.x[row * N_IN..(row + 1) * N_IN];
        if k >= len {
            x.fill(0.0);
            batch.valid[row] = false;
            continue;
        }
        let i = start + k;
        x.copy_from_slice(&norm.encode(&seq.feats[i], inputs));
        batch.valid[row] = labelled && seq.complete(i);
        batch.label[row] = seq.label[i];
        batch.pos[row] = seq.pos[i];
    }
}
