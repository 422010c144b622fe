//! Markov chain over simulated behaviour primitives.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::domain::SimEvent;
use crate::error::{Error, Result};
use crate::rng;

const N: usize = SimEvent::COUNT;

/// Row-stochastic transition matrix indexed by [`SimEvent::index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TransitionMatrix {
    m: [[f64; N]; N],
}

impl TryFrom<Vec<Vec<f64>>> for TransitionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != N || rows.iter().any(|r| r.len() != N) {
            return Err(Error::config(format!("transition matrix must be {N}x{N}")));
        }
        let mut m = [[0.0; N]; N];
        for (dst, src) in m.iter_mut().zip(&rows) {
            dst.copy_from_slice(src);
        }
        Self::new(m)
    }
}

impl From<TransitionMatrix> for Vec<Vec<f64>> {
    fn from(t: TransitionMatrix) -> Self {
        t.m.iter().map(|r| r.to_vec()).collect()
    }
}

impl TransitionMatrix {
    pub const ROW_TOLERANCE: f64 = 1e-9;

    pub fn new(m: [[f64; N]; N]) -> Result<Self> {
        for (i, row) in m.iter().enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::config(format!("transition row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > Self::ROW_TOLERANCE {
                return Err(Error::config(format!("transition row {i} sums to {sum}, not 1")));
            }
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        let mut m = [[0.0; N]; N];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { m }
    }

    pub fn uniform() -> Self {
        Self {
            m: [[1.0 / N as f64; N]; N],
        }
    }

    /// Default behaviour model, rows in `SimEvent` order
    /// (leave, enter, walk, still, local).
    ///
    /// Dwell lengths come from [`DwellTimes`], so the diagonal is left empty
    /// and every segment boundary is a real change of activity.
    pub fn default_behavior() -> Self {
        Self {
            m: [
                [0.0, 0.30, 0.15, 0.40, 0.15],
                [0.0, 0.00, 0.50, 0.30, 0.20],
                [0.15, 0.05, 0.00, 0.50, 0.30],
                [0.10, 0.05, 0.55, 0.00, 0.30],
                [0.10, 0.05, 0.45, 0.40, 0.00],
            ],
        }
    }

    pub fn get(&self, from: SimEvent, to: SimEvent) -> f64 {
        self.m[from.index()][to.index()]
    }

    pub fn row(&self, from: SimEvent) -> &[f64; N] {
        &self.m[from.index()]
    }

    pub fn rows(&self) -> &[[f64; N]; N] {
        &self.m
    }

    /// Stationary distribution by power iteration on the lazy chain
    /// `(I + M) / 2`, which shares the stationary vector but is aperiodic.
    /// Starts from the uniform vector and stops once the L1 change is below 1e-10.
    pub fn stationary(&self) -> [f64; N] {
        let mut pi = [1.0 / N as f64; N];
        for _ in 0..1_000_000 {
            let mut next = [0.0; N];
            for (i, p) in pi.iter().enumerate() {
                next[i] += 0.5 * p;
                for (j, q) in self.m[i].iter().enumerate() {
                    next[j] += 0.5 * p * q;
                }
            }
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= total);
            let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if change < 1e-10 {
                break;
            }
        }
        pi
    }
}

fn draw(probs: &[f64; N], r: &mut impl Rng) -> SimEvent {
    let u: f64 = r.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last = i;
        }
        acc += p;
        if u < acc {
            return SimEvent::ALL[i];
        }
    }
    SimEvent::ALL[last]
}

/// Mean dwell time per event, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwellTimes {
    pub leave: f64,
    pub enter: f64,
    pub walk: f64,
    pub still: f64,
    pub local: f64,
}

impl Default for DwellTimes {
    fn default() -> Self {
        Self {
            leave: 2.0,
            enter: 2.0,
            walk: 3.0,
            still: 8.0,
            local: 4.0,
        }
    }
}

impl DwellTimes {
    pub fn mean_s(&self, e: SimEvent) -> f64 {
        match e {
            SimEvent::LeaveThroughDoor => self.leave,
            SimEvent::EnterRoom => self.enter,
            SimEvent::WalkWithinRoom => self.walk,
            SimEvent::RemainStill => self.still,
            SimEvent::LocalMotion => self.local,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for e in SimEvent::ALL {
            let m = self.mean_s(e);
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::config(format!("dwell time of {e:?} must be positive")));
            }
        }
        Ok(())
    }
}

/// Infinite stream of `(event, dwell steps)` segments.
pub struct SegmentChain<'a, R: Rng> {
    m: &'a TransitionMatrix,
    dwell: DwellTimes,
    f_s: f64,
    current: Option<SimEvent>,
    rng: R,
}

impl<'a, R: Rng> SegmentChain<'a, R> {
    pub fn new(m: &'a TransitionMatrix, dwell: DwellTimes, f_s: f64, rng: R) -> Result<Self> {
        dwell.validate()?;
        if !(f_s > 0.0 && f_s.is_finite()) {
            return Err(Error::config("sample rate must be positive"));
        }
        Ok(Self {
            m,
            dwell,
            f_s,
            current: None,
            rng,
        })
    }
}

impl<R: Rng> Iterator for SegmentChain<'_, R> {
    type Item = (SimEvent, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let e = match self.current {
            None => draw(&self.m.stationary(), &mut self.rng),
            Some(prev) => draw(self.m.row(prev), &mut self.rng),
        };
        self.current = Some(e);
        let p = (1.0 / (self.dwell.mean_s(e) * self.f_s)).min(1.0);
        let extra = Geometric::new(p).map(|g| g.sample(&mut self.rng)).unwrap_or(0);
        Some((e, 1 + extra as usize))
    }
}

/// Per-step behaviour labels of length `len`.
pub fn sample_sim_events(
    m: &TransitionMatrix,
    dwell: &DwellTimes,
    f_s: f64,
    len: usize,
    seed: u64,
) -> Result<Vec<SimEvent>> {
    if len == 0 {
        return Err(Error::config("sequence length must be at least 1"));
    }
    let chain = SegmentChain::new(m, *dwell, f_s, rng::stream(seed, &[rng::tag::EVENTS]))?;
    let mut out = Vec::with_capacity(len);
    for (e, n) in chain {
        let take = n.min(len - out.len());
        out.extend(std::iter::repeat(e).take(take));
        if out.len() == len {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_stochastic_rows() {
        let mut m = TransitionMatrix::uniform().m;
        m[2][0] += 0.01;
        assert!(TransitionMatrix::new(m).unwrap_err().is_config());
        m[2][0] = -0.01;
        assert!(TransitionMatrix::new(m).is_err());
        assert!(TransitionMatrix::try_from(vec![vec![1.0]]).is_err());
    }

    #[test]
    fn default_rows_are_stochastic() {
        let d = TransitionMatrix::default_behavior();
        assert!(TransitionMatrix::new(d.m).is_ok());
    }

    #[test]
    fn stationary_is_a_fixed_point() {
        let m = TransitionMatrix::default_behavior();
        let pi = m.stationary();
        for j in 0..N {
            let v: f64 = (0..N).map(|i| pi[i] * m.m[i][j]).sum();
            assert!((v - pi[j]).abs() < 1e-9, "{v} vs {}", pi[j]);
        }
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_chain_never_moves() {
        let m = TransitionMatrix::identity();
        for seed in 0..20 {
            let ev = sample_sim_events(&m, &DwellTimes::default(), 100.0, 3000, seed).unwrap();
            assert!(ev.iter().all(|e| *e == ev[0]));
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let m = TransitionMatrix::default_behavior();
        let a = sample_sim_events(&m, &DwellTimes::default(), 100.0, 5000, 3).unwrap();
        let b = sample_sim_events(&m, &DwellTimes::default(), 100.0, 5000, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5000);
        assert!(sample_sim_events(&m, &DwellTimes::default(), 100.0, 0, 3).is_err());
    }

    #[test]
    fn toml_round_trip_preserves_rows() {
        #[derive(Serialize, Deserialize)]
        struct W {
            m: TransitionMatrix,
        }
        let w = W {
            m: TransitionMatrix::default_behavior(),
        };
        let text = toml::to_string(&w).unwrap();
        let back: W = toml::from_str(&text).unwrap();
        assert_eq!(back.m, w.m);
    }
}
