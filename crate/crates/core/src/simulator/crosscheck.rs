//! Routes a simulated trajectory through CSI synthesis and feature
//! extraction, and compares per-segment feature means against the table.

use super::dataset::LabeledSequence;
use super::kinematics::{segments, RoomSpec};
use crate::csi::{synthesize_csi, RadioConfig};
use crate::domain::{FeatureRangeTable, RangeCell, RealEvent, N_SLOTS};
use crate::error::Result;
use crate::features::{extract_sequence, FeatureFrame, WindowConfig, SLOT_PLCR};

/// Largest allowed gap between the segment means of extracted and directly
/// synthesized PLCR on geometric-model cells, m/s.
pub const MODEL_TOLERANCE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentCheck {
    pub event: RealEvent,
    pub start: usize,
    pub len: usize,
    /// Mean extracted value per slot; NaN where no window fits in the segment.
    pub means: [f64; N_SLOTS],
    pub slot_pass: [Option<bool>; N_SLOTS],
}

impl SegmentCheck {
    pub fn checked(&self) -> bool {
        self.slot_pass.iter().any(|p| p.is_some())
    }

    pub fn pass(&self) -> bool {
        self.slot_pass.iter().all(|p| p.unwrap_or(true))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrossCheck {
    pub segments: Vec<SegmentCheck>,
    pub extracted: Vec<FeatureFrame>,
}

impl CrossCheck {
    pub fn checked(&self) -> usize {
        self.segments.iter().filter(|s| s.checked()).count()
    }

    pub fn passed(&self) -> usize {
        self.segments.iter().filter(|s| s.checked() && s.pass()).count()
    }
}

/// Synthesizes CSI for `seq` (occupied exactly while inside), extracts
/// features and checks every label segment. A slot is evaluated on the
/// extracted frames whose whole window lies inside the segment; interval
/// cells compare the mean (PLCR as magnitude) against the cell, the
/// geometric cell compares against the directly synthesized PLCR.
pub fn cross_check(
    seq: &LabeledSequence,
    room: &RoomSpec,
    radio: &RadioConfig,
    table: &FeatureRangeTable,
    windows: &WindowConfig,
) -> Result<CrossCheck> {
    let f_s = seq.traj.f_s;
    let radio = RadioConfig {
        tx_pos: room.tx_pos,
        rx_pos: room.rx_pos,
        sample_rate_hz: f_s,
        ..radio.clone()
    };
    let frames = synthesize_csi(&seq.traj, &radio, &seq.traj.inside)?;
    let extracted = extract_sequence(&frames, windows, &radio)?;
    let win_steps = windows.slot_spans().map(|w| (w * f_s).round() as usize);

    let mut out = Vec::new();
    for (event, start, len) in segments(&seq.real_events) {
        let end = start + len;
        let mut sums = [0.0; N_SLOTS];
        let mut ref_sums = [0.0; N_SLOTS];
        let mut counts = [0usize; N_SLOTS];
        for ff in &extracted {
            let i = (ff.ts * f_s).round() as usize;
            if i < start || i >= end {
                continue;
            }
            for slot in 0..N_SLOTS {
                let v = ff.values[slot];
                if v.is_nan() || i + 1 < start + win_steps[slot] {
                    continue;
                }
                let cell = table.cell(event, slot);
                sums[slot] += if slot == SLOT_PLCR && matches!(cell, RangeCell::Interval { .. }) {
                    v.abs()
                } else {
                    v
                };
                ref_sums[slot] += seq.features[i].values[slot];
                counts[slot] += 1;
            }
        }
        let mut means = [f64::NAN; N_SLOTS];
        let mut slot_pass = [None; N_SLOTS];
        for slot in 0..N_SLOTS {
            if counts[slot] == 0 {
                continue;
            }
            let m = sums[slot] / counts[slot] as f64;
            means[slot] = m;
            slot_pass[slot] = Some(match table.cell(event, slot) {
                RangeCell::Interval { lo, hi } => m >= lo && m <= hi,
                RangeCell::GeometricModel => {
                    let reference = ref_sums[slot] / counts[slot] as f64;
                    reference.is_finite() && (m - reference).abs() <= MODEL_TOLERANCE
                }
            });
        }
        out.push(SegmentCheck {
            event,
            start,
            len,
            means,
            slot_pass,
        });
    }
    Ok(CrossCheck {
        segments: out,
        extracted,
    })
}
