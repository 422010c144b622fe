//! Single-dynamic-path CSI forward model and the CSI trace format.
//!
//! Every synthesized frame follows
//! `H(f, t) = H_s(f) + 1[occupied] * A * exp(-j 2 pi d(t) / lambda_f) + n(t)`,
//! with `d(t)` the Tx -> target -> Rx reflected path length.

mod trace;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Trajectory};
use crate::rng;

pub use trace::{parse_csi_trace, read_csi_trace, write_csi_trace, write_csi_trace_file, TraceHeader};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const MAX_COORD: f64 = 1.0e6;

/// One CSI snapshot: `n_sub x n_rx` complex gains, subcarrier-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiFrame {
    pub ts: f64,
    pub n_sub: usize,
    pub n_rx: usize,
    pub h: Vec<Complex64>,
}

impl CsiFrame {
    pub fn new(ts: f64, n_sub: usize, n_rx: usize, h: Vec<Complex64>) -> Result<Self> {
        if n_sub == 0 || n_rx == 0 {
            return Err(Error::Synthesis("CSI frame needs at least one subcarrier and antenna".into()));
        }
        if h.len() != n_sub * n_rx {
            return Err(Error::Synthesis(format!(
                "CSI frame has {} entries, expected {}",
                h.len(),
                n_sub * n_rx
            )));
        }
        if !ts.is_finite() || h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Synthesis("CSI frame contains non-finite values".into()));
        }
        Ok(Self { ts, n_sub, n_rx, h })
    }

    #[inline]
    pub fn get(&self, sub: usize, rx: usize) -> Complex64 {
        self.h[sub * self.n_rx + rx]
    }

    pub fn n_cells(&self) -> usize {
        self.h.len()
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            ts: self.ts,
            n_sub: self.n_sub,
            n_rx: self.n_rx,
            h: self.h.iter().map(|v| v * c).collect(),
        }
    }
}

/// Radio link and forward-model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub carrier_freq_hz: f64,
    pub n_subcarriers: usize,
    pub n_rx_antennas: usize,
    pub subcarrier_spacing_hz: f64,
    pub tx_pos: Point2,
    pub rx_pos: Point2,
    /// Packet rate in Hz.
    pub sample_rate_hz: f64,
    pub static_gain_seed: u64,
    pub noise_seed: u64,
    /// |A| relative to the unit mean static magnitude.
    pub dyn_amplitude: f64,
    /// Standard deviation of the complex additive noise, `E|n|^2 = noise_std^2`.
    pub noise_std: f64,
    /// Per-frame common gain fluctuation, as a multiple of `noise_std`.
    pub common_mode_ratio: f64,
    /// Peak path-length excursion caused by respiration of an occupied target, meters.
    pub breathing_depth_m: f64,
    pub breathing_rate_hz: f64,
    /// Number of static multipath components making up `H_s`.
    pub static_paths: usize,
    /// Maximum excess delay of the static multipath components, seconds.
    pub static_delay_spread_s: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 5.32e9,
            n_subcarriers: 30,
            n_rx_antennas: 3,
            subcarrier_spacing_hz: 625.0e3,
            tx_pos: Point2::new(0.0, 0.0),
            rx_pos: Point2::new(4.0, 0.0),
            sample_rate_hz: 100.0,
            static_gain_seed: 0x5eed,
            noise_seed: 0x0115e,
            dyn_amplitude: 0.1,
            noise_std: 0.0035,
            common_mode_ratio: 0.4,
            breathing_depth_m: 0.0,
            breathing_rate_hz: 0.25,
            static_paths: 4,
            static_delay_spread_s: 40.0e-9,
        }
    }
}

impl RadioConfig {
    /// Calibration fixture for the forward-model cross-check: the defaults
    /// plus a sub-millimetre respiration excursion, which puts extracted
    /// stillness features inside their table cells.
    pub fn calibrated() -> Self {
        Self {
            breathing_depth_m: 0.0008,
            ..Self::default()
        }
    }

    /// Carrier wavelength, `c / f_c`.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    pub fn subcarrier_freq(&self, k: usize) -> f64 {
        self.carrier_freq_hz + k as f64 * self.subcarrier_spacing_hz
    }

    pub fn subcarrier_wavelength(&self, k: usize) -> f64 {
        SPEED_OF_LIGHT / self.subcarrier_freq(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_freq_hz > 0.0 && self.carrier_freq_hz.is_finite()) {
            return Err(Error::config("carrier_freq_hz must be positive"));
        }
        if self.n_subcarriers == 0 || self.n_rx_antennas == 0 {
            return Err(Error::config("need at least one subcarrier and one antenna"));
        }
        if !(50.0..=2000.0).contains(&self.sample_rate_hz) {
            return Err(Error::config(format!(
                "sample_rate_hz {} outside the supported [50, 2000] Hz",
                self.sample_rate_hz
            )));
        }
        if !(self.tx_pos.is_finite() && self.rx_pos.is_finite()) || self.tx_pos == self.rx_pos {
            return Err(Error::config("tx_pos and rx_pos must be finite and distinct"));
        }
        for (name, v) in [
            ("dyn_amplitude", self.dyn_amplitude),
            ("noise_std", self.noise_std),
            ("common_mode_ratio", self.common_mode_ratio),
            ("breathing_depth_m", self.breathing_depth_m),
            ("breathing_rate_hz", self.breathing_rate_hz),
            ("static_delay_spread_s", self.static_delay_spread_s),
            ("subcarrier_spacing_hz", self.subcarrier_spacing_hz),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and non-negative")));
            }
        }
        if self.static_paths == 0 {
            return Err(Error::config("static_paths must be at least 1"));
        }
        Ok(())
    }

    /// The fixed static component `H_s`, normalised to unit mean magnitude.
    ///
    /// A line-of-sight path plus weaker delayed paths, so `H_s` varies smoothly
    /// across subcarriers; each antenna gets independent path gains.
    pub fn static_channel(&self) -> Vec<Complex64> {
        let mut r = rng::stream(self.static_gain_seed, &[rng::tag::CSI]);
        let los_delay = self.tx_pos.distance(self.rx_pos) / SPEED_OF_LIGHT;
        let n_rx = self.n_rx_antennas;
        let mut h = vec![Complex64::new(0.0, 0.0); self.n_subcarriers * n_rx];
        for a in 0..n_rx {
            for p in 0..self.static_paths {
                let (delay, gain) = if p == 0 {
                    (los_delay, 1.0)
                } else {
                    let excess: f64 = r.gen_range(0.05..1.0) * self.static_delay_spread_s;
                    let g: f64 = 0.5 * r.gen_range(0.2..1.0);
                    (los_delay + excess, g)
                };
                let phase: f64 = r.gen_range(0.0..std::f64::consts::TAU);
                for k in 0..self.n_subcarriers {
                    let arg = phase - std::f64::consts::TAU * self.subcarrier_freq(k) * delay;
                    h[k * n_rx + a] += Complex64::from_polar(gain, arg);
                }
            }
        }
        let mean_mag = h.iter().map(|c| c.norm()).sum::<f64>() / h.len() as f64;
        if mean_mag > 0.0 {
            for c in &mut h {
                *c /= mean_mag;
            }
        }
        h
    }
}

/// Reflected path length `|tx - target| + |target - rx|`.
pub fn path_length(tx: Point2, rx: Point2, target: Point2) -> f64 {
    tx.distance(target) + target.distance(rx)
}

/// Time derivative of the reflected path length for a target moving with `velocity`.
pub fn range_rate(tx: Point2, rx: Point2, target: Point2, velocity: Point2) -> Result<f64> {
    let a = target - tx;
    let b = target - rx;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateGeometry(
            "target coincides with a link endpoint".into(),
        ));
    }
    if !velocity.is_finite() {
        return Err(Error::DegenerateGeometry("velocity is not finite".into()));
    }
    Ok(velocity.dot(a * (1.0 / na) + b * (1.0 / nb)))
}

/// Path length of a trajectory step including the respiration excursion.
fn dynamic_path(cfg: &RadioConfig, p: Point2, t: f64) -> f64 {
    let breath = if cfg.breathing_depth_m > 0.0 {
        cfg.breathing_depth_m * (std::f64::consts::TAU * cfg.breathing_rate_hz * t).sin()
    } else {
        0.0
    };
    path_length(cfg.tx_pos, cfg.rx_pos, p) + breath
}

/// Synthesizes one CSI frame per trajectory step.
pub fn synthesize_csi(traj: &Trajectory, cfg: &RadioConfig, occupied: &[bool]) -> Result<Vec<CsiFrame>> {
    cfg.validate().map_err(|e| Error::Synthesis(e.to_string()))?;
    if occupied.len() != traj.len() {
        return Err(Error::Synthesis(format!(
            "occupancy has {} steps, trajectory has {}",
            occupied.len(),
            traj.len()
        )));
    }
    if (traj.f_s - cfg.sample_rate_hz).abs() > 1e-9 * cfg.sample_rate_hz {
        return Err(Error::Synthesis(format!(
            "trajectory sampled at {} Hz but radio runs at {} Hz",
            traj.f_s, cfg.sample_rate_hz
        )));
    }
    if let Some(i) = traj
        .pos
        .iter()
        .position(|p| !p.is_finite() || p.x.abs() > MAX_COORD || p.y.abs() > MAX_COORD)
    {
        return Err(Error::Synthesis(format!("trajectory point {i} is outside the numeric range")));
    }

    let hs = cfg.static_channel();
    let (n_sub, n_rx) = (cfg.n_subcarriers, cfg.n_rx_antennas);
    let inv_lambda: Vec<f64> = (0..n_sub).map(|k| 1.0 / cfg.subcarrier_wavelength(k)).collect();
    let mut r = rng::stream(cfg.noise_seed, &[rng::tag::CSI, 1]);
    let cell_noise = Normal::new(0.0, cfg.noise_std / std::f64::consts::SQRT_2)
        .map_err(|e| Error::Synthesis(e.to_string()))?;
    let gain_std = cfg.common_mode_ratio * cfg.noise_std;

    let mut frames = Vec::with_capacity(traj.len());
    let mut dyn_k = vec![Complex64::new(0.0, 0.0); n_sub];
    for (i, (&p, &occ)) in traj.pos.iter().zip(occupied).enumerate() {
        let t = i as f64 / cfg.sample_rate_hz;
        if occ {
            let d = dynamic_path(cfg, p, t);
            for (k, dk) in dyn_k.iter_mut().enumerate() {
                *dk = Complex64::from_polar(cfg.dyn_amplitude, -std::f64::consts::TAU * d * inv_lambda[k]);
            }
        }
        let gain = if gain_std > 0.0 {
            let z: f64 = StandardNormal.sample(&mut r);
            1.0 + gain_std * z
        } else {
            1.0
        };
        let mut h = Vec::with_capacity(n_sub * n_rx);
        for k in 0..n_sub {
            for a in 0..n_rx {
                let mut v = hs[k * n_rx + a];
                if occ {
                    v += dyn_k[k];
                }
                v *= gain;
                if cfg.noise_std > 0.0 {
                    v += Complex64::new(cell_noise.sample(&mut r), cell_noise.sample(&mut r));
                }
                h.push(v);
            }
        }
        frames.push(CsiFrame {
            ts: t,
            n_sub,
            n_rx,
            h,
        });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quiet() -> RadioConfig {
        RadioConfig {
            noise_std: 0.0,
            ..RadioConfig::default()
        }
    }

    #[test]
    fn path_length_examples() {
        let (tx, rx) = (Point2::new(0.0, 0.0), Point2::new(4.0, 0.0));
        assert_abs_diff_eq!(path_length(tx, rx, Point2::new(2.0, 1.5)), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(path_length(tx, rx, Point2::new(1.3, 0.0)), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn range_rate_examples() {
        let (tx, rx) = (Point2::new(0.0, 0.0), Point2::new(4.0, 0.0));
        let p = Point2::new(2.0, 1.5);
        assert_abs_diff_eq!(range_rate(tx, rx, p, Point2::new(0.0, 1.0)).unwrap(), 1.2, epsilon = 1e-12);
        assert_eq!(range_rate(tx, rx, p, Point2::new(0.0, 0.0)).unwrap(), 0.0);
        // unit-vector sum is (0, 1.2); motion along x is orthogonal to it
        assert_abs_diff_eq!(range_rate(tx, rx, p, Point2::new(0.7, 0.0)).unwrap(), 0.0, epsilon = 1e-12);
        assert!(matches!(
            range_rate(tx, rx, tx, Point2::new(1.0, 0.0)),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn wavelength_is_derived() {
        let cfg = RadioConfig::default();
        assert_abs_diff_eq!(cfg.wavelength(), 299_792_458.0 / 5.32e9, epsilon = 0.0);
        assert_abs_diff_eq!(cfg.wavelength(), 0.056353, epsilon = 2e-6);
    }

    #[test]
    fn unoccupied_noiseless_frames_equal_static() {
        let cfg = quiet();
        let traj = Trajectory::stationary(Point2::new(2.0, 1.5), 20, cfg.sample_rate_hz);
        let frames = synthesize_csi(&traj, &cfg, &[false; 20]).unwrap();
        let hs = cfg.static_channel();
        for f in &frames {
            assert_eq!(f.h, hs);
        }
    }

    #[test]
    fn static_channel_has_unit_mean_magnitude() {
        let hs = RadioConfig::default().static_channel();
        let m = hs.iter().map(|c| c.norm()).sum::<f64>() / hs.len() as f64;
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn occupied_stationary_is_constant_but_not_static() {
        let cfg = quiet();
        let traj = Trajectory::stationary(Point2::new(2.0, 1.5), 20, cfg.sample_rate_hz);
        let frames = synthesize_csi(&traj, &cfg, &[true; 20]).unwrap();
        let hs = cfg.static_channel();
        assert_ne!(frames[0].h, hs);
        for f in &frames[1..] {
            assert_eq!(f.h, frames[0].h);
        }
    }

    #[test]
    fn dynamic_term_has_amplitude_a() {
        let cfg = quiet();
        let traj = Trajectory::linear(Point2::new(1.0, 1.0), Point2::new(0.4, 0.3), 50, cfg.sample_rate_hz);
        let frames = synthesize_csi(&traj, &cfg, &[true; 50]).unwrap();
        let hs = cfg.static_channel();
        for f in &frames {
            for (v, s) in f.h.iter().zip(&hs) {
                assert_abs_diff_eq!((v - s).norm(), cfg.dyn_amplitude, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = quiet();
        let mut traj = Trajectory::stationary(Point2::new(2.0, 1.5), 3, cfg.sample_rate_hz);
        assert!(synthesize_csi(&traj, &cfg, &[true; 2]).is_err());
        traj.pos[1] = Point2::new(f64::NAN, 0.0);
        assert!(matches!(synthesize_csi(&traj, &cfg, &[true; 3]), Err(Error::Synthesis(_))));
        traj.pos[1] = Point2::new(2.0e6, 0.0);
        assert!(synthesize_csi(&traj, &cfg, &[true; 3]).is_err());
        let slow = Trajectory::stationary(Point2::new(2.0, 1.5), 3, 37.0);
        assert!(synthesize_csi(&slow, &cfg, &[true; 3]).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let cfg = RadioConfig::default();
        let traj = Trajectory::stationary(Point2::new(2.0, 1.5), 10, cfg.sample_rate_hz);
        let a = synthesize_csi(&traj, &cfg, &[true; 10]).unwrap();
        let b = synthesize_csi(&traj, &cfg, &[true; 10]).unwrap();
        assert_eq!(a, b);
        let other = RadioConfig { noise_seed: 9, ..cfg };
        assert_ne!(synthesize_csi(&traj, &other, &[true; 10]).unwrap(), a);
    }
}
