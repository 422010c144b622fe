//! Classification and localization metrics.

use serde::{Deserialize, Serialize};

use crate::domain::RealEvent;
use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Counts indexed `[truth][prediction]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; RealEvent::COUNT]; RealEvent::COUNT],
}

impl ConfusionMatrix {
    pub fn add(&mut self, truth: RealEvent, pred: RealEvent) {
        self.counts[truth.index()][pred.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..RealEvent::COUNT).map(|i| self.counts[i][i]).sum()
    }

    /// Trace over total; NaN for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    pub fn precision(&self, e: RealEvent) -> Option<f64> {
        let k = e.index();
        let col: u64 = self.counts.iter().map(|r| r[k]).sum();
        (col > 0).then(|| self.counts[k][k] as f64 / col as f64)
    }

    pub fn recall(&self, e: RealEvent) -> Option<f64> {
        let k = e.index();
        let row: u64 = self.counts[k].iter().sum();
        (row > 0).then(|| self.counts[k][k] as f64 / row as f64)
    }
}

impl std::fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:>12}", "truth\\pred")?;
        for e in RealEvent::ALL {
            write!(f, " {:>12}", e.name())?;
        }
        for e in RealEvent::ALL {
            write!(f, "\n{:>12}", e.name())?;
            for c in self.counts[e.index()] {
                write!(f, " {c:>12}")?;
            }
        }
        Ok(())
    }
}

pub fn score_events(truth: &[RealEvent], pred: &[RealEvent]) -> Result<(ConfusionMatrix, f64)> {
    if truth.len() != pred.len() {
        return Err(Error::Evaluation(format!(
            "{} truth labels vs {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let mut m = ConfusionMatrix::default();
    for (&t, &p) in truth.iter().zip(pred) {
        m.add(t, p);
    }
    let acc = m.accuracy();
    Ok((m, acc))
}

/// Sorted localization errors in meters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorCdf {
    errors: Vec<f64>,
}

impl ErrorCdf {
    pub fn from_errors(mut errors: Vec<f64>) -> Result<Self> {
        if let Some(bad) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::Evaluation(format!("invalid localization error {bad}")));
        }
        errors.sort_by(f64::total_cmp);
        Ok(Self { errors })
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    /// Linear interpolation between order statistics at `q * (n - 1)`;
    /// NaN when empty.
    pub fn percentile(&self, q: f64) -> f64 {
        let n = self.errors.len();
        if n == 0 {
            return f64::NAN;
        }
        let x = q.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = x.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let frac = x - lo as f64;
        self.errors[lo] + frac * (self.errors[hi] - self.errors[lo])
    }

    pub fn median(&self) -> f64 {
        self.percentile(0.5)
    }

    pub fn p90(&self) -> f64 {
        self.percentile(0.9)
    }

    pub fn mean(&self) -> f64 {
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }

    /// `(error, cumulative probability)` rows, probability `(i + 1) / n`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.errors.len() as f64;
        self.errors
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, (i + 1) as f64 / n))
            .collect()
    }
}

pub fn score_tracking(truth: &[Point2], pred: &[Point2], mask: &[bool]) -> Result<ErrorCdf> {
    if truth.len() != pred.len() || truth.len() != mask.len() {
        return Err(Error::Evaluation(format!(
            "length mismatch: {} truth, {} predicted, {} mask",
            truth.len(),
            pred.len(),
            mask.len()
        )));
    }
    let errors: Vec<f64> = truth
        .iter()
        .zip(pred)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((t, p), _)| t.distance(*p))
        .collect();
    if errors.is_empty() {
        return Err(Error::Evaluation("no frames selected for tracking".into()));
    }
    ErrorCdf::from_errors(errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use RealEvent::*;

    #[test]
    fn perfect_and_constant_predictions() {
        let truth: Vec<RealEvent> = RealEvent::ALL.iter().cycle().take(40).cloned().collect();
        let (m, acc) = score_events(&truth, &truth).unwrap();
        assert_eq!(acc, 1.0);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.counts[i][j], if i == j { 10 } else { 0 });
            }
        }
        let (_, acc) = score_events(&truth, &vec![Absence; 40]).unwrap();
        assert_eq!(acc, 0.25);
        assert!(score_events(&truth, &truth[1..]).is_err());
    }

    #[test]
    fn hand_counted_ten_frames() {
        let truth = [Absence, Absence, Stillness, Stillness, Stillness, LocalMotion, LocalMotion, Walking, Walking, Walking];
        let pred = [Absence, Stillness, Stillness, Stillness, LocalMotion, LocalMotion, Walking, Walking, Walking, Absence];
        let (m, acc) = score_events(&truth, &pred).unwrap();
        let want = [[1, 1, 0, 0], [0, 2, 1, 0], [0, 0, 1, 1], [1, 0, 0, 2]];
        assert_eq!(m.counts, want);
        assert_eq!(acc, 0.6);
        assert_eq!(m.total(), 10);
        assert_eq!(m.precision(Absence), Some(0.5));
        assert_eq!(m.recall(Walking), Some(2.0 / 3.0));
    }

    #[test]
    fn tracking_percentiles() {
        let truth = vec![Point2::new(1.0, 1.0); 5];
        let cdf = score_tracking(&truth, &truth, &[true; 5]).unwrap();
        assert_eq!((cdf.median(), cdf.p90()), (0.0, 0.0));
        let off: Vec<Point2> = truth.iter().map(|p| Point2::new(p.x + 0.6, p.y + 0.8)).collect();
        let cdf = score_tracking(&truth, &off, &[true; 5]).unwrap();
        assert!((cdf.median() - 1.0).abs() < 1e-15 && (cdf.p90() - 1.0).abs() < 1e-15);
        assert!(score_tracking(&truth, &off, &[false; 5]).is_err());
        let cdf = score_tracking(&truth, &off, &[true, false, true, false, false]).unwrap();
        assert_eq!(cdf.len(), 2);
    }

    #[test]
    fn cdf_points_ascend() {
        let cdf = ErrorCdf::from_errors(vec![0.3, 0.1, 0.2]).unwrap();
        assert_eq!(cdf.points(), vec![(0.1, 1.0 / 3.0), (0.2, 2.0 / 3.0), (0.3, 1.0)]);
        assert!(ErrorCdf::from_errors(vec![f64::NAN]).is_err());
    }
}
