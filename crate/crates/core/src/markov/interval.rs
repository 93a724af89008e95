//! Transitions between a finite score set and the unit interval.

use super::{ensure_same, Measure, ScoreSet, Transition};
use crate::Result;

/// A measure on `[0, 1]` built from weighted uniform pieces and atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMeasure {
    /// `(lo, hi, mass)`; `lo == hi` is an atom.
    pieces: Vec<(f64, f64, f64)>,
}

impl IntervalMeasure {
    pub fn pieces(&self) -> &[(f64, f64, f64)] {
        &self.pieces
    }

    /// Mass of `[0, x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .map(|&(lo, hi, m)| {
                if x >= hi {
                    m
                } else if x <= lo {
                    0.0
                } else {
                    m * (x - lo) / (hi - lo)
                }
            })
            .sum()
    }

    /// Mass of `[0, x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .map(|&(lo, hi, m)| {
                if x > hi || (x == hi && lo < hi) {
                    m
                } else if x <= lo {
                    0.0
                } else {
                    m * (x - lo) / (hi - lo)
                }
            })
            .sum()
    }

    /// Largest gap to the uniform distribution, checked at every breakpoint
    /// from both sides. Exact because the distribution function is linear
    /// between breakpoints.
    pub fn distance_to_uniform(&self) -> f64 {
        let mut points: Vec<f64> = vec![0.0, 1.0];
        for &(lo, hi, _) in &self.pieces {
            points.push(lo);
            points.push(hi);
        }
        points
            .into_iter()
            .map(|x| (self.cdf(x) - x).abs().max((self.cdf_left(x) - x).abs()))
            .fold(0.0, f64::max)
    }
}

/// Either the distribution transition of a measure (scores into `[0, 1]`)
/// or its quantile transition (`[0, 1]` into scores).
#[derive(Clone, Debug, PartialEq)]
pub enum UnitIntervalTransition {
    /// Score `s` goes to the uniform law on `[F(s-), F(s)]`.
    Distribution { scores: ScoreSet, cdf: Vec<f64> },
    /// Point `p` goes to the smallest score whose cdf reaches `p`; `1` goes
    /// to the top score.
    Quantile { scores: ScoreSet, cdf: Vec<f64> },
}

impl UnitIntervalTransition {
    pub fn distribution(mu: &Measure) -> Self {
        Self::Distribution { scores: mu.scores.clone(), cdf: mu.cdf() }
    }

    pub fn quantile(nu: &Measure) -> Self {
        Self::Quantile { scores: nu.scores.clone(), cdf: nu.cdf() }
    }

    fn parts(&self) -> (&ScoreSet, &[f64]) {
        match self {
            Self::Distribution { scores, cdf } | Self::Quantile { scores, cdf } => (scores, cdf),
        }
    }

    /// Interval `[F(s-), F(s)]` for a distribution transition.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        let (_, cdf) = self.parts();
        let lo = if i == 0 { 0.0 } else { cdf[i - 1] };
        (lo, cdf[i])
    }

    /// Score index reached from `p` by a quantile transition.
    pub fn quantile_index(&self, p: f64) -> usize {
        let (scores, cdf) = self.parts();
        if p >= 1.0 {
            return scores.top();
        }
        cdf.iter().position(|&c| c >= p).unwrap_or(scores.top())
    }

    /// Image of a score measure under a distribution transition.
    pub fn push_measure(&self, mu: &Measure) -> Result<IntervalMeasure> {
        let (scores, _) = self.parts();
        ensure_same(scores, &mu.scores)?;
        let pieces = (0..scores.len())
            .filter(|&i| mu.weights[i] > 0.0)
            .map(|i| {
                let (lo, hi) = self.interval(i);
                (lo, hi, mu.weights[i])
            })
            .collect();
        Ok(IntervalMeasure { pieces })
    }

    /// Image of an interval measure under a quantile transition.
    pub fn push_interval(&self, m: &IntervalMeasure) -> Measure {
        let (scores, _) = self.parts();
        let mut out = vec![0.0; scores.len()];
        for &(lo, hi, mass) in &m.pieces {
            for (o, w) in out.iter_mut().zip(self.spread(lo, hi)) {
                *o += mass * w;
            }
        }
        Measure::from_raw(scores.clone(), out)
    }

    /// Law of the quantile transition applied to a uniform draw on `[lo, hi]`.
    fn spread(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (scores, cdf) = self.parts();
        let mut row = vec![0.0; scores.len()];
        if hi > lo {
            let mut prev = 0.0_f64;
            for (j, &c) in cdf.iter().enumerate() {
                let overlap = c.min(hi) - prev.max(lo);
                if overlap > 0.0 {
                    row[j] = overlap / (hi - lo);
                }
                prev = c;
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= total);
        } else {
            row[self.quantile_index(lo)] = 1.0;
        }
        row
    }

    /// Finite transition obtained by following a distribution transition
    /// with a quantile transition.
    pub fn then(&self, quantile: &UnitIntervalTransition) -> Result<Transition> {
        let (source, _) = self.parts();
        let (target, _) = quantile.parts();
        let mut probs = Vec::with_capacity(source.len() * target.len());
        for i in 0..source.len() {
            let (lo, hi) = self.interval(i);
            probs.extend(quantile.spread(lo, hi));
        }
        Ok(Transition::from_flat(source.clone(), target.clone(), probs))
    }
}

/// Distribution transition of `mu` followed by the quantile transition of
/// `nu`, computed exactly.
pub fn fq_compose(mu: &Measure, nu: &Measure) -> Result<Transition> {
    ensure_same(&mu.scores, &nu.scores)?;
    UnitIntervalTransition::distribution(mu).then(&UnitIntervalTransition::quantile(nu))
}
