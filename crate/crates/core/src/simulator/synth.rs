//! Direct feature synthesis from events and trajectories.
//!
//! Interval cells use a Gaussian-copula AR(1) process: `z` follows a unit
//! variance AR(1) and the emitted value is `lo + (hi - lo) * Phi(z)`, so the
//! stationary distribution is exactly uniform on the cell and every value
//! stays inside it. The geometric cell emits the range rate plus noise.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use super::kinematics::{RoomSpec, REFERENCE_RATE_HZ};
use crate::csi::range_rate;
use crate::domain::{FeatureRangeTable, RangeCell, RealEvent, N_SLOTS};
use crate::error::{Error, Result};
use crate::features::{FeatureFrame, WindowConfig};
use crate::geometry::Trajectory;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSynthParams {
    /// AR(1) coefficient per step at the 100 Hz reference rate.
    pub ar_coeff: f64,
    /// Standard deviation of the range-rate noise at the reference rate, m/s.
    /// Scaled by `sqrt(100 / f_s)` since a Doppler window holds proportionally more samples.
    pub plcr_noise_std: f64,
}

impl Default for FeatureSynthParams {
    fn default() -> Self {
        Self {
            ar_coeff: 0.9,
            plcr_noise_std: 0.08,
        }
    }
}

impl FeatureSynthParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.ar_coeff) {
            return Err(Error::config("ar_coeff must be in [0, 1)"));
        }
        if !(self.plcr_noise_std >= 0.0 && self.plcr_noise_std.is_finite()) {
            return Err(Error::config("plcr_noise_std must be non-negative"));
        }
        Ok(())
    }

    /// Per-step coefficient at `f_s`, keeping the correlation time of the reference.
    pub fn ar_coeff_at(&self, f_s: f64) -> f64 {
        self.ar_coeff.powf(REFERENCE_RATE_HZ / f_s)
    }

    pub fn plcr_noise_at(&self, f_s: f64) -> f64 {
        self.plcr_noise_std * (REFERENCE_RATE_HZ / f_s).sqrt()
    }
}

/// Emits one feature frame per step. Slots whose window would reach before
/// the start of the sequence carry the sentinel, mirroring extraction.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_features(
    real_events: &[RealEvent],
    traj: &Trajectory,
    table: &FeatureRangeTable,
    room: &RoomSpec,
    windows: &WindowConfig,
    params: &FeatureSynthParams,
    f_s: f64,
    seed: u64,
) -> Result<Vec<FeatureFrame>> {
    table.validate()?;
    params.validate()?;
    windows.validate()?;
    if real_events.len() != traj.len() {
        return Err(Error::config(format!(
            "{} event labels for a {}-step trajectory",
            real_events.len(),
            traj.len()
        )));
    }
    if !(f_s > 0.0 && f_s.is_finite()) {
        return Err(Error::config("sample rate must be positive"));
    }
    let mut r = rng::stream(seed, &[rng::tag::FEATURES]);
    let phi = StatNormal::new(0.0, 1.0).expect("standard normal");
    let rho = params.ar_coeff_at(f_s);
    let innov = (1.0 - rho * rho).sqrt();
    let noise = params.plcr_noise_at(f_s);
    let warm = windows.slot_spans();

    let mut z = [0.0f64; N_SLOTS];
    let mut prev: Option<RealEvent> = None;
    let mut out = Vec::with_capacity(real_events.len());
    for (i, &e) in real_events.iter().enumerate() {
        let t = i as f64 / f_s;
        if prev != Some(e) {
            for zi in &mut z {
                *zi = StandardNormal.sample(&mut r);
            }
            prev = Some(e);
        } else {
            for zi in &mut z {
                let eps: f64 = StandardNormal.sample(&mut r);
                *zi = rho * *zi + innov * eps;
            }
        }
        let mut values = [FeatureFrame::SENTINEL; N_SLOTS];
        for (slot, v) in values.iter_mut().enumerate() {
            let x = match table.cell(e, slot) {
                RangeCell::Interval { lo, hi } => lo + (hi - lo) * phi.cdf(z[slot]),
                RangeCell::GeometricModel => {
                    let eps: f64 = StandardNormal.sample(&mut r);
                    let truth = range_rate(room.tx_pos, room.rx_pos, traj.pos[i], traj.velocity(i)).unwrap_or(0.0);
                    truth + noise * eps
                }
            };
            if t >= warm[slot] - 1e-6 {
                *v = x;
            }
        }
        out.push(FeatureFrame::new(t, values));
    }
    Ok(out)
}
