//! Experiment protocols: train/test runs, feature ablation, packet-rate sweep.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{ConfusionMatrix, ErrorCdf};
use crate::config::ExperimentConfig;
use crate::domain::{RealEvent, N_SLOTS};
use crate::error::{Error, Result};
use crate::inverse::{split_indices, train_frames, EpochLog, FrameSeq, InverseModel, ModelConfig};
use crate::simulator::{simulate_sequence, SimConfig};

/// Held-out per-frame scores of one model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scored {
    pub confusion: ConfusionMatrix,
    /// Errors on frames where truth and prediction are both present.
    pub cdf: ErrorCdf,
}

/// Scores complete frames only; frames disagreeing on presence count in the
/// confusion matrix but not in the error CDF.
pub fn score_model(model: &InverseModel, test: &[FrameSeq]) -> Result<Scored> {
    let mut confusion = ConfusionMatrix::default();
    let mut errors = Vec::new();
    for s in test {
        let preds = model.infer_frames(s);
        if preds.is_empty() {
            continue;
        }
        for (i, p) in preds.iter().enumerate() {
            if !s.complete(i) {
                continue;
            }
            let truth = RealEvent::from_index(s.label[i] as usize).expect("valid label");
            confusion.add(truth, p.event());
            if let (true, Some(q)) = (truth != RealEvent::Absence, p.pos) {
                errors.push(((q.x - s.pos[i][0]).powi(2) + (q.y - s.pos[i][1]).powi(2)).sqrt());
            }
        }
    }
    if confusion.total() == 0 {
        return Err(Error::Evaluation("test set has no complete frames".into()));
    }
    Ok(Scored {
        confusion,
        cdf: ErrorCdf::from_errors(errors)?,
    })
}

/// Mean wall time of [`InverseModel::predict_latest`] over `samples`
/// consecutive frames of `seqs` (cycled), in seconds.
pub fn measure_latency(model: &InverseModel, seqs: &[FrameSeq], samples: usize) -> Result<f64> {
    let frames: Vec<_> = seqs.iter().filter(|s| !s.is_empty()).map(|s| s.frames()).collect();
    if frames.is_empty() || samples == 0 {
        return Err(Error::Evaluation("latency needs at least one frame and one sample".into()));
    }
    let c = model.config.context;
    let mut total = 0.0;
    let mut done = 0;
    'outer: loop {
        for f in &frames {
            for end in 1..=f.len() {
                let w = &f[end.saturating_sub(c)..end];
                let t0 = Instant::now();
                let p = model.predict_latest(w);
                total += t0.elapsed().as_secs_f64();
                std::hint::black_box(p);
                done += 1;
                if done == samples {
                    break 'outer;
                }
            }
        }
    }
    Ok(total / samples as f64)
}

/// Simulates `n` sequences at `rate_hz` and reduces each to model frames
/// right away, so high packet rates do not hold full-rate records.
pub fn simulate_frames(cfg: &ExperimentConfig, rate_hz: f64, n: usize, hop_s: f64) -> Result<Vec<FrameSeq>> {
    let sim = SimConfig {
        sample_rate_hz: rate_hz,
        ..cfg.sim.clone()
    };
    sim.validate()?;
    (0..n as u64)
        .map(|id| {
            let s = simulate_sequence(&sim, &cfg.ranges, &cfg.windows, cfg.seed, id, None)?;
            Ok(FrameSeq::from_record(&s.to_record(), hop_s))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<FrameSeq>,
    pub test: Vec<FrameSeq>,
}

impl Split {
    pub fn new(seqs: Vec<FrameSeq>, test_fraction: f64, seed: u64) -> Self {
        let (tr, te) = split_indices(seqs.len(), test_fraction, seed);
        let mut slots: Vec<Option<FrameSeq>> = seqs.into_iter().map(Some).collect();
        let mut take = |idx: &[usize]| idx.iter().map(|&i| slots[i].take().expect("disjoint")).collect();
        let train = take(&tr);
        let test = take(&te);
        Self { train, test }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub accuracy: f64,
    pub precision: [Option<f64>; RealEvent::COUNT],
    pub recall: [Option<f64>; RealEvent::COUNT],
    pub median_error: Option<f64>,
    pub p90_error: Option<f64>,
    pub mean_error: Option<f64>,
    pub mean_latency_s: Option<f64>,
    pub fingerprint: String,
    pub seed: u64,
    pub confusion: ConfusionMatrix,
    pub cdf: ErrorCdf,
    pub train_log: Vec<EpochLog>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, scored: Scored, cfg: &ExperimentConfig) -> Self {
        let m = &scored.confusion;
        let cdf = scored.cdf;
        let some = |v: f64| (!cdf.is_empty()).then_some(v);
        Self {
            name: name.into(),
            accuracy: m.accuracy(),
            precision: RealEvent::ALL.map(|e| m.precision(e)),
            recall: RealEvent::ALL.map(|e| m.recall(e)),
            median_error: some(cdf.median()),
            p90_error: some(cdf.p90()),
            mean_error: some(cdf.mean()),
            mean_latency_s: None,
            fingerprint: cfg.fingerprint(),
            seed: cfg.seed,
            confusion: scored.confusion,
            cdf,
            train_log: Vec::new(),
        }
    }
}

/// Trains `mcfg` on the split's training part and scores the test part.
pub fn train_and_score(cfg: &ExperimentConfig, mcfg: &ModelConfig, split: &Split, name: &str) -> Result<(InverseModel, ExperimentReport)> {
    let out = train_frames(&split.train, mcfg, &cfg.train)?;
    let scored = score_model(&out.model, &split.test)?;
    let mut report = ExperimentReport::new(name, scored, cfg);
    report.train_log = out.log;
    Ok((out.model, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubset {
    pub name: String,
    pub inputs: [bool; N_SLOTS],
}

impl FeatureSubset {
    pub fn new(name: &str, inputs: [bool; N_SLOTS]) -> Self {
        Self {
            name: name.into(),
            inputs,
        }
    }
}

/// Correlation alone, correlation plus DSER (both on the short window), and
/// all five slots.
pub fn default_subsets() -> Vec<FeatureSubset> {
    vec![
        FeatureSubset::new("corr@0.5s", [true, false, false, false, false]),
        FeatureSubset::new("corr+dser@0.5s", [true, true, false, false, false]),
        FeatureSubset::new("all", [true; N_SLOTS]),
    ]
}

#[derive(Debug)]
pub struct AblationRow {
    pub subset: FeatureSubset,
    pub report: Result<ExperimentReport>,
}

/// One model per subset on the same split and seeds; a failing subset is
/// reported in its row without stopping the others.
pub fn run_ablation(cfg: &ExperimentConfig, split: &Split, subsets: &[FeatureSubset]) -> Result<Vec<AblationRow>> {
    if subsets.is_empty() {
        return Err(Error::config("ablation needs at least one feature subset"));
    }
    Ok(subsets
        .iter()
        .map(|s| {
            let mcfg = ModelConfig {
                inputs: s.inputs,
                ..cfg.model.clone()
            };
            let report = train_and_score(cfg, &mcfg, split, &s.name).map(|(_, r)| r);
            if let Err(e) = &report {
                log::warn!("ablation subset {}: {e}", s.name);
            }
            AblationRow {
                subset: s.clone(),
                report,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub rate_hz: f64,
    pub accuracy: f64,
    pub mean_error: f64,
    pub median_error: f64,
}

/// Full simulate, train and score pipeline at each packet rate, with
/// `experiment.sweep_sequences` sequences per rate.
pub fn run_rate_sweep(cfg: &ExperimentConfig, rates_hz: &[f64]) -> Result<Vec<RateRow>> {
    let n = cfg.experiment.sweep_sequences;
    rates_hz
        .iter()
        .map(|&rate| {
            let seqs = simulate_frames(cfg, rate, n, cfg.model.hop_s)?;
            let split = Split::new(seqs, cfg.experiment.test_fraction, cfg.seed);
            let (_, r) = train_and_score(cfg, &cfg.model, &split, &format!("{rate} Hz"))?;
            log::info!("rate {rate} Hz: accuracy {:.4}, mean error {:?}", r.accuracy, r.mean_error);
            Ok(RateRow {
                rate_hz: rate,
                accuracy: r.accuracy,
                mean_error: r.mean_error.unwrap_or(f64::NAN),
                median_error: r.median_error.unwrap_or(f64::NAN),
            })
        })
        .collect()
}

/// Trend checks over a sweep sorted by rate: errors never rise by more than
/// `tol` from one rate to the next, and the top two rates differ by at most
/// `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateTrend {
    pub monotone: bool,
    pub plateau: bool,
}

pub fn rate_trend(rows: &[RateRow], tol: f64) -> RateTrend {
    let mut r: Vec<&RateRow> = rows.iter().collect();
    r.sort_by(|a, b| a.rate_hz.total_cmp(&b.rate_hz));
    let monotone = r.windows(2).all(|w| w[1].mean_error <= w[0].mean_error + tol);
    let plateau = match r.as_slice() {
        [.., a, b] => (b.mean_error - a.mean_error).abs() <= tol,
        _ => true,
    };
    RateTrend { monotone, plateau }
}
