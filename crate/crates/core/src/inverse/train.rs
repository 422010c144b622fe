//! Mini-batch training with validation-based checkpoint selection.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{fill_chunk, FrameSeq, Normalizer};
use super::model::InverseModel;
use super::net::{argmax, frame_loss, softmax, Batch, Net, N_EVENTS};
use super::{ModelConfig, Optimizer, TrainConfig};
use crate::domain::RealEvent;
use crate::error::{Error, Result};
use crate::rng;
use crate::simulator::SequenceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest validation loss.
    pub model: InverseModel,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
}

/// Seeded split of `0..n` into (kept, held out) with `round(n * fraction)`
/// held out, at least one of each when `n >= 2`.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, &[rng::tag::SPLIT]));
    let mut held = ((n as f64) * fraction).round() as usize;
    if n >= 2 {
        held = held.clamp(1, n - 1);
    }
    let keep = idx.split_off(held.min(n));
    let mut held = idx;
    let mut keep = keep;
    held.sort_unstable();
    keep.sort_unstable();
    (keep, held)
}

pub fn train(records: &[SequenceRecord], mcfg: &ModelConfig, tcfg: &TrainConfig) -> Result<TrainOutcome> {
    let seqs: Vec<FrameSeq> = records.iter().map(|r| FrameSeq::from_record(r, mcfg.hop_s)).collect();
    train_frames(&seqs, mcfg, tcfg)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, p: &mut [f64], g: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..p.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g[i] * g[i];
            p[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

fn check_classes(seqs: &[FrameSeq]) -> Result<()> {
    let mut seen = [false; RealEvent::COUNT];
    for s in seqs {
        for i in 0..s.len() {
            if s.complete(i) {
                seen[s.label[i] as usize] = true;
            }
        }
    }
    let missing: Vec<&str> = RealEvent::ALL
        .iter()
        .filter(|e| !seen[e.index()])
        .map(|e| e.name())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Training(format!("training data has no frames of: {}", missing.join(", "))))
    }
}

/// Mean per-frame loss and accuracy of `model` over the complete frames of `seqs`.
pub(crate) fn evaluate(model: &InverseModel, seqs: &[FrameSeq], tcfg: &TrainConfig) -> (f64, f64) {
    let (mut loss, mut correct, mut n) = (0.0, 0usize, 0usize);
    for s in seqs {
        let o = model.outputs(s);
        for i in 0..s.len() {
            if !s.complete(i) {
                continue;
            }
            let lg = &o.logits[i * N_EVENTS..(i + 1) * N_EVENTS];
            let y = s.label[i] as usize;
            loss += frame_loss(lg, &o.pos[i * 2..i * 2 + 2], y, s.pos[i], tcfg.lambda_sta, tcfg.lambda_pos);
            if argmax(&softmax(lg)) == y {
                correct += 1;
            }
            n += 1;
        }
    }
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    (loss / n as f64, correct as f64 / n as f64)
}

pub fn train_frames(seqs: &[FrameSeq], mcfg: &ModelConfig, tcfg: &TrainConfig) -> Result<TrainOutcome> {
    mcfg.validate()?;
    tcfg.validate()?;
    if seqs.len() < 2 {
        return Err(Error::Training(format!(
            "need at least two sequences for a validation split, got {}",
            seqs.len()
        )));
    }
    check_classes(seqs)?;
    let (tr_idx, val_idx) = split_indices(seqs.len(), tcfg.val_fraction, mcfg.seed);
    let tr: Vec<&FrameSeq> = tr_idx.iter().map(|&i| &seqs[i]).collect();
    let val: Vec<FrameSeq> = val_idx.iter().map(|&i| seqs[i].clone()).collect();
    let norm = Normalizer::fit(&tr.iter().map(|s| (*s).clone()).collect::<Vec<_>>())?;

    let mut pos_sum = [0.0; 2];
    let mut pos_n = 0usize;
    for s in &tr {
        for i in 0..s.len() {
            if s.complete(i) && s.label[i] as usize != RealEvent::Absence.index() {
                pos_sum[0] += s.pos[i][0];
                pos_sum[1] += s.pos[i][1];
                pos_n += 1;
            }
        }
    }
    let pos_bias = if pos_n > 0 {
        [pos_sum[0] / pos_n as f64, pos_sum[1] / pos_n as f64]
    } else {
        [0.0; 2]
    };

    let net = Net::new(mcfg);
    let mut params = net.init(&mut rng::stream(mcfg.seed, &[rng::tag::INIT]), pos_bias);
    let mut grad = vec![0.0; net.n_params];
    let mut adam = Adam {
        m: vec![0.0; net.n_params],
        v: vec![0.0; net.n_params],
        t: 0,
    };
    let c = mcfg.context;
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut log = Vec::new();
    let mut since_best = 0;

    for epoch in 0..tcfg.epochs {
        let mut r = rng::stream(mcfg.seed, &[rng::tag::SHUFFLE, epoch as u64]);
        let mut chunks = Vec::new();
        for (si, s) in tr.iter().enumerate() {
            let n = s.len();
            let off = r.gen_range(0..c);
            if off > 0 {
                chunks.push((si, 0, off.min(n)));
            }
            let mut start = off;
            while start < n {
                chunks.push((si, start, c.min(n - start)));
                start += c;
            }
        }
        chunks.shuffle(&mut r);

        let (mut ep_loss, mut ep_correct, mut ep_frames) = (0.0, 0usize, 0usize);
        for (bi, group) in chunks.chunks(tcfg.batch_size).enumerate() {
            let mut batch = Batch::new(group.len(), c);
            for (k, &(si, start, len)) in group.iter().enumerate() {
                fill_chunk(&mut batch, k, tr[si], start, len, &norm, &mcfg.inputs, true);
            }
            let frames = batch.valid.iter().filter(|&&v| v).count();
            if frames == 0 {
                continue;
            }
            let cache = net.forward(&params, &batch);
            let w = 1.0 / frames as f64;
            let stats = net.loss_backward(&params, &batch, &cache, tcfg.lambda_sta, tcfg.lambda_pos, w, &mut grad);
            let norm2: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !stats.loss.is_finite() || !norm2.is_finite() {
                return Err(Error::Training(format!(
                    "diverged at epoch {epoch}, batch {bi}: loss {}, gradient norm {norm2}, learning rate {}",
                    stats.loss, tcfg.learning_rate
                )));
            }
            if norm2 > tcfg.clip_norm {
                let s = tcfg.clip_norm / norm2;
                grad.iter_mut().for_each(|g| *g *= s);
            }
            match tcfg.optimizer {
                Optimizer::Adam => adam.step(&mut params, &grad, tcfg.learning_rate),
                Optimizer::Sgd => {
                    for (p, g) in params.iter_mut().zip(&grad) {
                        *p -= tcfg.learning_rate * g;
                    }
                }
            }
            ep_loss += stats.loss * frames as f64;
            ep_correct += stats.correct;
            ep_frames += frames;
        }

        let model = InverseModel::new(mcfg.clone(), norm, params.clone())?;
        let (val_loss, val_acc) = evaluate(&model, &val, tcfg);
        let entry = EpochLog {
            epoch,
            train_loss: ep_loss / ep_frames.max(1) as f64,
            train_acc: ep_correct as f64 / ep_frames.max(1) as f64,
            val_loss,
            val_acc,
        };
        log::info!(
            "epoch {epoch}: train loss {:.4} acc {:.4}, val loss {:.4} acc {:.4}",
            entry.train_loss,
            entry.train_acc,
            val_loss,
            val_acc
        );
        log.push(entry);
        if !val_loss.is_finite() {
            return Err(Error::Training(format!("validation loss is {val_loss} at epoch {epoch}")));
        }
        if best.as_ref().map_or(true, |b| val_loss < b.0) {
            best = Some((val_loss, epoch, params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= tcfg.early_stop_patience {
                log::info!("early stop after epoch {epoch}");
                break;
            }
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model: InverseModel::new(mcfg.clone(), norm, params)?,
        log,
        best_epoch,
    })
}
