//! Physical features over sliding windows of CSI frames.
//!
//! Static and dynamic components are separated per window: `H_s` is the
//! temporal mean of each (subcarrier, antenna) cell, `H_d` the residual.

mod io;

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::csi::{CsiFrame, RadioConfig};
use crate::domain::N_SLOTS;
use crate::error::{Error, Result};

pub use io::{parse_feature_file, read_feature_file, write_feature_file, write_features};

/// Slot order of [`FeatureFrame::values`].
pub const SLOT_CORR_SHORT: usize = 0;
pub const SLOT_DSER_SHORT: usize = 1;
pub const SLOT_PLCR: usize = 2;
pub const SLOT_CORR_LONG: usize = 3;
pub const SLOT_DSER_LONG: usize = 4;

/// Subcarriers whose amplitude variance falls below this contribute zero correlation.
pub const MIN_VARIANCE: f64 = 1e-12;
/// Windows whose mean static power falls below this are degenerate.
pub const MIN_STATIC_POWER: f64 = 1e-18;
/// DSER is clamped to `[-DSER_CLAMP, DSER_CLAMP]`.
pub const DSER_CLAMP: f64 = 10.0;
/// Residual-to-static power ratio below which PLCR reports no motion.
pub const PLCR_NOISE_FLOOR: f64 = 1e-4;

/// One timestep of the five feature slots. NaN marks a window that is not yet full.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureFrame {
    pub ts: f64,
    pub values: [f64; N_SLOTS],
}

impl FeatureFrame {
    pub const SENTINEL: f64 = f64::NAN;

    pub fn new(ts: f64, values: [f64; N_SLOTS]) -> Self {
        Self { ts, values }
    }

    pub fn empty(ts: f64) -> Self {
        Self {
            ts,
            values: [Self::SENTINEL; N_SLOTS],
        }
    }

    pub fn corr_short(&self) -> f64 {
        self.values[SLOT_CORR_SHORT]
    }
    pub fn dser_short(&self) -> f64 {
        self.values[SLOT_DSER_SHORT]
    }
    pub fn plcr(&self) -> f64 {
        self.values[SLOT_PLCR]
    }
    pub fn corr_long(&self) -> f64 {
        self.values[SLOT_CORR_LONG]
    }
    pub fn dser_long(&self) -> f64 {
        self.values[SLOT_DSER_LONG]
    }

    /// All five slots carry values.
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Bitwise equality, treating sentinels as equal.
    pub fn same_bits(&self, other: &Self) -> bool {
        self.ts.to_bits() == other.ts.to_bits()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub short_s: f64,
    pub long_s: f64,
    pub plcr_s: f64,
    pub hop_s: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            short_s: 0.5,
            long_s: 2.0,
            plcr_s: 0.1,
            hop_s: 0.1,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.plcr_s > 0.0 && self.plcr_s < self.short_s && self.short_s < self.long_s) {
            return Err(Error::config("windows must satisfy 0 < plcr_s < short_s < long_s"));
        }
        if !(self.hop_s > 0.0 && self.hop_s.is_finite()) {
            return Err(Error::config("hop_s must be positive"));
        }
        Ok(())
    }

    /// Window length of each slot, seconds.
    pub fn slot_windows(&self) -> [f64; N_SLOTS] {
        [self.short_s, self.short_s, self.plcr_s, self.long_s, self.long_s]
    }

    /// History each slot needs before it can be filled. PLCR takes its static
    /// reference from the short window, so it needs `short_s` of data.
    pub fn slot_spans(&self) -> [f64; N_SLOTS] {
        [self.short_s, self.short_s, self.short_s, self.long_s, self.long_s]
    }
}

fn check_window(frames: &[CsiFrame], min: usize) -> Result<()> {
    if frames.len() < min {
        return Err(Error::Window(format!(
            "window has {} frames, needs at least {min}",
            frames.len()
        )));
    }
    let (n_sub, n_rx) = (frames[0].n_sub, frames[0].n_rx);
    if frames.iter().any(|f| f.n_sub != n_sub || f.n_rx != n_rx || f.h.len() != n_sub * n_rx) {
        return Err(Error::Window("frames in the window change shape".into()));
    }
    Ok(())
}

/// Mean absolute off-diagonal Pearson correlation of subcarrier amplitude
/// series, averaged over receive antennas.
pub fn subcarrier_correlation(frames: &[CsiFrame]) -> Result<f64> {
    check_window(frames, 2)?;
    let (n_sub, n_rx, n) = (frames[0].n_sub, frames[0].n_rx, frames.len());
    if n_sub < 2 {
        return Err(Error::Window("correlation needs at least two subcarriers".into()));
    }
    let mut series = vec![0.0; n_sub * n];
    let mut total = 0.0;
    for a in 0..n_rx {
        // centred, unit-norm amplitude series; None for degenerate variance
        let mut valid = vec![false; n_sub];
        for k in 0..n_sub {
            let row = &mut series[k * n..(k + 1) * n];
            for (t, f) in frames.iter().enumerate() {
                row[t] = f.get(k, a).norm();
            }
            let mean = row.iter().sum::<f64>() / n as f64;
            let mut ss = 0.0;
            for v in row.iter_mut() {
                *v -= mean;
                ss += *v * *v;
            }
            if ss / n as f64 >= MIN_VARIANCE {
                let inv = 1.0 / ss.sqrt();
                row.iter_mut().for_each(|v| *v *= inv);
                valid[k] = true;
            }
        }
        let mut acc = 0.0;
        for i in 0..n_sub {
            if !valid[i] {
                continue;
            }
            let ri = &series[i * n..(i + 1) * n];
            for j in (i + 1)..n_sub {
                if !valid[j] {
                    continue;
                }
                let rj = &series[j * n..(j + 1) * n];
                let r: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
                acc += r.abs().min(1.0);
            }
        }
        total += acc / (n_sub * (n_sub - 1) / 2) as f64;
    }
    Ok(total / n_rx as f64)
}

/// Per-cell temporal mean of a window, the estimate of `H_s`.
pub fn static_component(frames: &[CsiFrame]) -> Vec<Complex64> {
    let n = frames.len() as f64;
    let mut mean = vec![Complex64::new(0.0, 0.0); frames[0].h.len()];
    for f in frames {
        for (m, v) in mean.iter_mut().zip(&f.h) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    mean
}

/// Dynamic-to-static energy ratio, `log10(mean|H_d|^2 / |H_s|^2)` per cell,
/// clamped to +-10 and averaged over cells.
pub fn dser(frames: &[CsiFrame]) -> Result<f64> {
    check_window(frames, 2)?;
    let hs = static_component(frames);
    let static_power = hs.iter().map(|c| c.norm_sqr()).sum::<f64>() / hs.len() as f64;
    if !(static_power >= MIN_STATIC_POWER) {
        return Err(Error::DegenerateStatic(static_power));
    }
    let n = frames.len() as f64;
    let mut dyn_power = vec![0.0; hs.len()];
    for f in frames {
        for ((p, v), s) in dyn_power.iter_mut().zip(&f.h).zip(&hs) {
            *p += (v - s).norm_sqr();
        }
    }
    let sum: f64 = dyn_power
        .iter()
        .zip(&hs)
        .map(|(p, s)| ratio_log10(p / n, s.norm_sqr()))
        .sum();
    Ok((sum / hs.len() as f64).clamp(-DSER_CLAMP, DSER_CLAMP))
}

fn ratio_log10(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        -DSER_CLAMP
    } else if den <= 0.0 {
        DSER_CLAMP
    } else {
        (num / den).log10().clamp(-DSER_CLAMP, DSER_CLAMP)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn frame_interval(frames: &[CsiFrame]) -> Result<f64> {
    let span = frames[frames.len() - 1].ts - frames[0].ts;
    let dt = span / (frames.len() - 1) as f64;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Window("window timestamps do not advance".into()));
    }
    Ok(dt)
}

/// Dominant Doppler frequency of the residual, in Hz (signed).
///
/// Residual series are Hann-windowed and zero-padded; their power spectra are
/// summed over cells and the peak refined by parabolic interpolation.
/// Returns `None` when the residual is below the noise floor.
pub fn dominant_doppler(frames: &[CsiFrame]) -> Result<Option<f64>> {
    check_window(frames, 3)?;
    dominant_doppler_with_static(frames, &static_component(frames))
}

/// As [`dominant_doppler`], with the static component supplied by the caller.
pub fn dominant_doppler_with_static(frames: &[CsiFrame], hs: &[Complex64]) -> Result<Option<f64>> {
    check_window(frames, 3)?;
    if hs.len() != frames[0].h.len() {
        return Err(Error::Window("static estimate does not match the frame shape".into()));
    }
    let dt = frame_interval(frames)?;
    let n = frames.len();
    let static_power = hs.iter().map(|c| c.norm_sqr()).sum::<f64>() / hs.len() as f64;
    let mut resid_power = 0.0;
    for f in frames {
        for (v, s) in f.h.iter().zip(hs) {
            resid_power += (v - s).norm_sqr();
        }
    }
    resid_power /= (n * hs.len()) as f64;
    if !(static_power > 0.0) || resid_power < PLCR_NOISE_FLOOR * static_power {
        return Ok(None);
    }

    let n_fft = (8 * n).next_power_of_two().max(256);
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n_fft));
    let window: Vec<f64> = (0..n)
        .map(|t| 0.5 - 0.5 * (std::f64::consts::TAU * (t as f64 + 0.5) / n as f64).cos())
        .collect();
    let mut power = vec![0.0; n_fft];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (c, s) in hs.iter().enumerate() {
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (t, f) in frames.iter().enumerate() {
            buf[t] = (f.h[c] - s) * window[t];
        }
        fft.process(&mut buf);
        for (p, b) in power.iter_mut().zip(&buf) {
            *p += b.norm_sqr();
        }
    }
    let (peak, _) = power
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
    let a = power[(peak + n_fft - 1) % n_fft];
    let b = power[peak];
    let c = power[(peak + 1) % n_fft];
    let denom = a - 2.0 * b + c;
    let delta = if denom < 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let mut bin = peak as f64 + delta;
    if bin >= n_fft as f64 / 2.0 {
        bin -= n_fft as f64;
    }
    Ok(Some(bin / (n_fft as f64 * dt)))
}

/// Path-length change rate, m/s: `-f_D * lambda`. Zero when no motion is detectable.
pub fn plcr(frames: &[CsiFrame], lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Window(format!("invalid wavelength {lambda}")));
    }
    Ok(match dominant_doppler(frames)? {
        Some(f_d) => -f_d * lambda,
        None => 0.0,
    })
}

/// PLCR over `doppler` with `H_s` taken as the mean of a longer `reference`
/// window. A 0.1 s window alone cannot tell slow motion from the static
/// component, so the window-mean estimate of [`plcr`] collapses for path
/// rates of a few tenths of a metre per second.
pub fn plcr_referenced(reference: &[CsiFrame], doppler: &[CsiFrame], lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Window(format!("invalid wavelength {lambda}")));
    }
    check_window(reference, 1)?;
    let hs = static_component(reference);
    Ok(match dominant_doppler_with_static(doppler, &hs)? {
        Some(f_d) => -f_d * lambda,
        None => 0.0,
    })
}

/// Sliding-window extraction over a full trace.
///
/// Output frames sit at `ts0 + k * hop_s`; each slot is computed over the
/// frames in `(t - window, t]` and stays NaN until the history it needs lies
/// entirely inside the trace (see [`WindowConfig::slot_spans`]). PLCR uses
/// the short window as its static reference. Per-window failures become NaN
/// with a warning.
pub fn extract_sequence(frames: &[CsiFrame], win: &WindowConfig, cfg: &RadioConfig) -> Result<Vec<FeatureFrame>> {
    win.validate()?;
    if frames.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(i) = frames.windows(2).position(|w| !(w[1].ts >= w[0].ts)) {
        return Err(Error::Format {
            line: i + 2,
            msg: "trace timestamps are not monotone".into(),
        });
    }
    let lambda = cfg.wavelength();
    let ts0 = frames[0].ts;
    let ts_last = frames[frames.len() - 1].ts;
    const EPS: f64 = 1e-6;
    let windows = win.slot_windows();
    let spans = win.slot_spans();

    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = ts0 + k as f64 * win.hop_s;
        if t > ts_last + EPS {
            break;
        }
        let end = frames.partition_point(|f| f.ts <= t + EPS);
        let mut ff = FeatureFrame::empty(t);
        let from = |w: f64| frames.partition_point(|f| f.ts <= t - w + EPS);
        for (slot, &w) in windows.iter().enumerate() {
            if t - spans[slot] < ts0 - EPS {
                continue;
            }
            let window = &frames[from(w)..end];
            let value = match slot {
                SLOT_CORR_SHORT | SLOT_CORR_LONG => subcarrier_correlation(window),
                SLOT_DSER_SHORT | SLOT_DSER_LONG => dser(window),
                _ => plcr_referenced(&frames[from(spans[slot])..end], window, lambda),
            };
            match value {
                Ok(v) => ff.values[slot] = v,
                Err(e) => log::warn!("feature slot {slot} at t={t:.3}s: {e}"),
            }
        }
        out.push(ff);
        k += 1;
    }
    Ok(out)
}
