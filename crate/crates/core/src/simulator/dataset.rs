//! Full modeling-track runs and the dataset file.
//!
//! Dataset files hold one record per sequence:
//! `{"id":0,"f_s":100.0,"sim":[3,3,...],"real":[1,1,...],"pos":[[x,y],...],"feat":[[c,d,p,c,d],...]}`
//! with `null` for sentinel feature slots.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::events::{sample_sim_events, DwellTimes, TransitionMatrix};
use super::kinematics::{expand_kinematics, map_to_real_events, KinematicParams, RoomSpec};
use super::synth::{synthesize_features, FeatureSynthParams};
use crate::domain::{FeatureRangeTable, RealEvent, SimEvent, N_SLOTS};
use crate::error::{Error, Result};
use crate::features::{FeatureFrame, WindowConfig};
use crate::geometry::{Point2, Trajectory};
use crate::rng;

/// Sequence durations are drawn uniformly from `[min_s, max_s]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LengthDist {
    pub min_s: f64,
    pub max_s: f64,
}

impl Default for LengthDist {
    fn default() -> Self {
        Self { min_s: 20.0, max_s: 40.0 }
    }
}

impl LengthDist {
    pub fn fixed(s: f64) -> Self {
        Self { min_s: s, max_s: s }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_s > 0.0 && self.min_s <= self.max_s && self.max_s.is_finite()) {
            return Err(Error::config("length distribution needs 0 < min_s <= max_s"));
        }
        Ok(())
    }

    pub fn sample_steps(&self, f_s: f64, r: &mut impl Rng) -> usize {
        let s = if self.max_s > self.min_s {
            r.gen_range(self.min_s..=self.max_s)
        } else {
            self.min_s
        };
        ((s * f_s).round() as usize).max(1)
    }
}

/// Everything the modeling track needs besides the range table and windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub sample_rate_hz: f64,
    pub transitions: TransitionMatrix,
    pub dwell_s: DwellTimes,
    pub room: RoomSpec,
    pub kinematics: KinematicParams,
    pub synthesis: FeatureSynthParams,
    pub length: LengthDist,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 100.0,
            transitions: TransitionMatrix::default_behavior(),
            dwell_s: DwellTimes::default(),
            room: RoomSpec::default(),
            kinematics: KinematicParams::default(),
            synthesis: FeatureSynthParams::default(),
            length: LengthDist::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::config("sample_rate_hz must be positive"));
        }
        self.dwell_s.validate()?;
        self.room.validate()?;
        self.kinematics.validate()?;
        self.synthesis.validate()?;
        self.length.validate()
    }
}

/// All four aligned series of one simulated sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub id: u64,
    pub sim_events: Vec<SimEvent>,
    pub real_events: Vec<RealEvent>,
    pub traj: Trajectory,
    pub features: Vec<FeatureFrame>,
}

impl LabeledSequence {
    pub fn len(&self) -> usize {
        self.real_events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real_events.is_empty()
    }

    /// Checks length alignment and that Absence coincides with being outside.
    pub fn check_alignment(&self) -> Result<()> {
        let n = self.len();
        if self.sim_events.len() != n || self.traj.len() != n || self.features.len() != n {
            return Err(Error::Synthesis(format!("sequence {} has misaligned series", self.id)));
        }
        for (i, (e, inside)) in self.real_events.iter().zip(&self.traj.inside).enumerate() {
            if (*e == RealEvent::Absence) == *inside {
                return Err(Error::Synthesis(format!(
                    "sequence {} step {i}: {e} while inside={inside}",
                    self.id
                )));
            }
        }
        Ok(())
    }

    pub fn to_record(&self) -> SequenceRecord {
        SequenceRecord {
            id: self.id,
            f_s: self.traj.f_s,
            sim: self.sim_events.clone(),
            real: self.real_events.clone(),
            pos: self.traj.pos.clone(),
            feat: self.features.iter().map(|f| f.values).collect(),
        }
    }
}

/// The persisted view of a sequence: labels, positions and features.
#[derive(Debug, Clone)]
pub struct SequenceRecord {
    pub id: u64,
    pub f_s: f64,
    pub sim: Vec<SimEvent>,
    pub real: Vec<RealEvent>,
    pub pos: Vec<Point2>,
    pub feat: Vec<[f64; N_SLOTS]>,
}

impl PartialEq for SequenceRecord {
    /// Bitwise on floats, with all NaN sentinels equal.
    fn eq(&self, o: &Self) -> bool {
        let bits = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        self.id == o.id
            && bits(self.f_s, o.f_s)
            && self.sim == o.sim
            && self.real == o.real
            && self.pos.len() == o.pos.len()
            && self.pos.iter().zip(&o.pos).all(|(a, b)| bits(a.x, b.x) && bits(a.y, b.y))
            && self.feat.len() == o.feat.len()
            && self
                .feat
                .iter()
                .zip(&o.feat)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| bits(*x, *y)))
    }
}

impl SequenceRecord {
    pub fn len(&self) -> usize {
        self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty()
    }

    pub fn frame(&self, i: usize) -> FeatureFrame {
        FeatureFrame::new(i as f64 / self.f_s, self.feat[i])
    }

    pub fn features(&self) -> Vec<FeatureFrame> {
        (0..self.len()).map(|i| self.frame(i)).collect()
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let n = self.real.len();
        if self.sim.len() != n || self.pos.len() != n || self.feat.len() != n {
            return Err(format!(
                "series lengths differ: sim {}, real {n}, pos {}, feat {}",
                self.sim.len(),
                self.pos.len(),
                self.feat.len()
            ));
        }
        if !(self.f_s > 0.0 && self.f_s.is_finite()) {
            return Err(format!("invalid f_s {}", self.f_s));
        }
        if self.pos.iter().any(|p| !p.is_finite()) {
            return Err("non-finite position".into());
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordRepr {
    id: u64,
    f_s: f64,
    sim: Vec<u8>,
    real: Vec<u8>,
    pos: Vec<[f64; 2]>,
    feat: Vec<[Option<f64>; N_SLOTS]>,
}

impl From<&SequenceRecord> for RecordRepr {
    fn from(r: &SequenceRecord) -> Self {
        Self {
            id: r.id,
            f_s: r.f_s,
            sim: r.sim.iter().map(|e| e.index() as u8).collect(),
            real: r.real.iter().map(|e| e.index() as u8).collect(),
            pos: r.pos.iter().map(|p| [p.x, p.y]).collect(),
            feat: r.feat.iter().map(|f| f.map(|v| v.is_finite().then_some(v))).collect(),
        }
    }
}

impl TryFrom<RecordRepr> for SequenceRecord {
    type Error = String;

    fn try_from(r: RecordRepr) -> std::result::Result<Self, String> {
        let sim = r
            .sim
            .iter()
            .map(|&i| SimEvent::from_index(i as usize).ok_or_else(|| format!("unknown sim event {i}")))
            .collect::<std::result::Result<_, _>>()?;
        let real = r
            .real
            .iter()
            .map(|&i| RealEvent::from_index(i as usize).ok_or_else(|| format!("unknown real event {i}")))
            .collect::<std::result::Result<_, _>>()?;
        let rec = SequenceRecord {
            id: r.id,
            f_s: r.f_s,
            sim,
            real,
            pos: r.pos.into_iter().map(Point2::from).collect(),
            feat: r
                .feat
                .into_iter()
                .map(|f| f.map(|v| v.unwrap_or(FeatureFrame::SENTINEL)))
                .collect(),
        };
        rec.validate()?;
        Ok(rec)
    }
}

pub fn write_dataset<W: Write>(records: &[SequenceRecord], mut out: W) -> Result<()> {
    let io_err = |e| Error::io("<dataset stream>", e);
    for (i, r) in records.iter().enumerate() {
        r.validate().map_err(|msg| Error::Format { line: i + 1, msg })?;
        serde_json::to_writer(&mut out, &RecordRepr::from(r)).map_err(|e| Error::Format {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_dataset_file(records: &[SequenceRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(records, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_dataset<R: BufRead>(source: R) -> Result<Vec<SequenceRecord>> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let err = |msg: String| Error::Parse {
            line: idx + 1,
            record: Some(idx),
            msg,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        let repr: RecordRepr = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        out.push(SequenceRecord::try_from(repr).map_err(err)?);
    }
    Ok(out)
}

pub fn read_dataset(path: &Path) -> Result<Vec<SequenceRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(BufReader::new(file))
}

/// Runs the whole modeling track for sequence `id`, with `len` steps or a
/// length drawn from the configured distribution.
pub fn simulate_sequence(
    cfg: &SimConfig,
    table: &FeatureRangeTable,
    windows: &WindowConfig,
    master_seed: u64,
    id: u64,
    len: Option<usize>,
) -> Result<LabeledSequence> {
    let seed = rng::derive_seed(master_seed, &[id]);
    let f_s = cfg.sample_rate_hz;
    let len = match len {
        Some(n) => n,
        None => cfg.length.sample_steps(f_s, &mut rng::stream(seed, &[rng::tag::LENGTH])),
    };
    let sim = sample_sim_events(&cfg.transitions, &cfg.dwell_s, f_s, len, seed)?;
    let traj = expand_kinematics(&sim, &cfg.room, &cfg.kinematics, f_s, seed)?;
    let real = map_to_real_events(&sim, &traj, &cfg.kinematics)?;
    let features = synthesize_features(&real, &traj, table, &cfg.room, windows, &cfg.synthesis, f_s, seed)?;
    Ok(LabeledSequence {
        id,
        sim_events: sim,
        real_events: real,
        traj,
        features,
    })
}

/// `n` independent sequences; sequence `i` depends only on `(cfg, master_seed, i)`.
pub fn generate_dataset(
    cfg: &SimConfig,
    table: &FeatureRangeTable,
    windows: &WindowConfig,
    n: usize,
    master_seed: u64,
) -> Result<Vec<SequenceRecord>> {
    if n == 0 {
        return Err(Error::config("n_sequences must be at least 1"));
    }
    cfg.validate()?;
    (0..n as u64)
        .map(|id| simulate_sequence(cfg, table, windows, master_seed, id, None).map(|s| s.to_record()))
        .collect()
}

/// Per-event step counts of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassBalance {
    pub counts: [u64; RealEvent::COUNT],
}

impl ClassBalance {
    pub fn of(records: &[SequenceRecord]) -> Self {
        let mut counts = [0u64; RealEvent::COUNT];
        for r in records {
            for e in &r.real {
                counts[e.index()] += 1;
            }
        }
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn fraction(&self, e: RealEvent) -> f64 {
        self.counts[e.index()] as f64 / self.total().max(1) as f64
    }

    pub fn min_fraction(&self) -> f64 {
        RealEvent::ALL.iter().map(|e| self.fraction(*e)).fold(f64::INFINITY, f64::min)
    }
}

impl std::fmt::Display for ClassBalance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, e) in RealEvent::ALL.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e} {:.1}% ({})", 100.0 * self.fraction(*e), self.counts[i])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::default_range_table;

    fn small_cfg() -> SimConfig {
        SimConfig {
            length: LengthDist { min_s: 5.0, max_s: 8.0 },
            ..SimConfig::default()
        }
    }

    #[test]
    fn fixed_length_single_sequence() {
        let s = simulate_sequence(&SimConfig::default(), &default_range_table(), &WindowConfig::default(), 1, 0, Some(777)).unwrap();
        assert_eq!(s.len(), 777);
        s.check_alignment().unwrap();
    }

    #[test]
    fn dataset_round_trip_and_determinism() {
        let cfg = small_cfg();
        let a = generate_dataset(&cfg, &default_range_table(), &WindowConfig::default(), 4, 11).unwrap();
        let b = generate_dataset(&cfg, &default_range_table(), &WindowConfig::default(), 4, 11).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        write_dataset(&a, &mut ba).unwrap();
        write_dataset(&b, &mut bb).unwrap();
        assert_eq!(ba, bb);
        let back = parse_dataset(&ba[..]).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn malformed_records_report_line() {
        let cfg = small_cfg();
        let a = generate_dataset(&cfg, &default_range_table(), &WindowConfig::default(), 1, 2).unwrap();
        let mut buf = Vec::new();
        write_dataset(&a, &mut buf).unwrap();
        let good = String::from_utf8(buf).unwrap();
        let bad = good.replacen("\"sim\":[", "\"sim\":[9,", 1);
        let text = format!("{good}{bad}");
        match parse_dataset(text.as_bytes()) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
