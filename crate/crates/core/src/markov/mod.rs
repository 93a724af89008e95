//! Finite measures and transitions on ordered score sets.

mod interval;

use std::sync::Arc;

use serde::Serialize;

use crate::{Error, Result, PROB_TOL};

pub use interval::{fq_compose, IntervalMeasure, UnitIntervalTransition};

/// A finite, strictly increasing set of scores.
#[derive(Clone, Debug, Serialize)]
pub struct ScoreSet(Arc<[f64]>);

impl ScoreSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidScoreSet("empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScoreSet("non-finite score".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidScoreSet("scores must be strictly increasing".into()));
        }
        Ok(Self(values.into()))
    }

    /// Pass/fail scores `{0, 1}`.
    pub fn binary() -> Self {
        Self(Arc::from(vec![0.0, 1.0]))
    }

    /// Scores `0, 1, ..., n - 1`.
    pub fn range(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn top(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_binary(&self) -> bool {
        self.0.len() == 2
    }
}

impl PartialEq for ScoreSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

fn ensure_same(a: &ScoreSet, b: &ScoreSet) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::ScoreSetMismatch)
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    for &w in weights {
        if !w.is_finite() || w < -PROB_TOL {
            return Err(Error::InvalidMeasure(format!("weight {w} is negative or non-finite")));
        }
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
    }
    Ok(())
}

/// Cumulative distribution of a weight vector.
///
/// Entries from the last positive weight onwards are exactly 1.
pub(crate) fn cdf_of(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w.max(0.0);
            acc.min(1.0)
        })
        .collect();
    let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    for v in &mut out[last..] {
        *v = 1.0;
    }
    out
}

/// A probability measure on a score set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measure {
    scores: ScoreSet,
    weights: Vec<f64>,
}

impl Measure {
    pub fn new(scores: ScoreSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != scores.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for {} scores",
                weights.len(),
                scores.len()
            )));
        }
        check_weights(&weights)?;
        let weights = weights.into_iter().map(|w| w.max(0.0)).collect();
        Ok(Self { scores, weights })
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn normalized(scores: ScoreSet, raw: Vec<f64>) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) || raw.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidMeasure("weights must be nonnegative with positive sum".into()));
        }
        Self::new(scores, raw.into_iter().map(|w| w / total).collect())
    }

    pub fn point_mass(scores: ScoreSet, index: usize) -> Result<Self> {
        if index >= scores.len() {
            return Err(Error::InvalidMeasure(format!("index {index} out of range")));
        }
        let mut weights = vec![0.0; scores.len()];
        weights[index] = 1.0;
        Ok(Self { scores, weights })
    }

    /// Pass/fail measure with pass probability `p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
            return Err(Error::InvalidMeasure(format!("pass probability {p} outside [0, 1]")));
        }
        let p = p.clamp(0.0, 1.0);
        Ok(Self { scores: ScoreSet::binary(), weights: vec![1.0 - p, p] })
    }

    pub(crate) fn from_raw(scores: ScoreSet, weights: Vec<f64>) -> Self {
        Self { scores, weights }
    }

    pub fn scores(&self) -> &ScoreSet {
        &self.scores
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Mass on the top score; the pass rate for pass/fail scores.
    pub fn top_mass(&self) -> f64 {
        self.weights[self.weights.len() - 1]
    }

    pub fn cdf(&self) -> Vec<f64> {
        cdf_of(&self.weights)
    }

    pub fn push(&self, k: &Transition) -> Result<Measure> {
        ensure_same(&self.scores, &k.source)?;
        let m = k.target.len();
        let mut out = vec![0.0; m];
        for (i, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(k.row(i)) {
                *o += w * p;
            }
        }
        Ok(Measure::from_raw(k.target.clone(), out))
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Measure, lambda: f64) -> Result<Measure> {
        ensure_same(&self.scores, &other.scores)?;
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Ok(Measure::from_raw(self.scores.clone(), weights))
    }

    pub fn fosd_geq(&self, other: &Measure) -> Result<bool> {
        fosd_geq(self, other)
    }

    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn max_abs_diff(&self, other: &Measure) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `mu` first-order stochastically dominates `nu`.
pub fn fosd_geq(mu: &Measure, nu: &Measure) -> Result<bool> {
    ensure_same(&mu.scores, &nu.scores)?;
    Ok(cdf_leq(&mu.cdf(), &nu.cdf()))
}

fn cdf_leq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x <= *y + PROB_TOL)
}

/// A row-stochastic matrix between two score sets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transition {
    source: ScoreSet,
    target: ScoreSet,
    probs: Vec<f64>,
}

impl Transition {
    pub fn new(source: ScoreSet, target: ScoreSet, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != source.len() {
            return Err(Error::InvalidTransition(format!(
                "{} rows for {} source scores",
                rows.len(),
                source.len()
            )));
        }
        let mut probs = Vec::with_capacity(source.len() * target.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != target.len() {
                return Err(Error::InvalidTransition(format!("row {i} has wrong length")));
            }
            check_weights(&row).map_err(|e| Error::InvalidTransition(format!("row {i}: {e}")))?;
            probs.extend(row.into_iter().map(|w| w.max(0.0)));
        }
        Ok(Self { source, target, probs })
    }

    pub(crate) fn from_flat(source: ScoreSet, target: ScoreSet, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), source.len() * target.len());
        Self { source, target, probs }
    }

    pub fn identity(scores: ScoreSet) -> Self {
        let n = scores.len();
        let mut probs = vec![0.0; n * n];
        for i in 0..n {
            probs[i * n + i] = 1.0;
        }
        Self { source: scores.clone(), target: scores, probs }
    }

    /// Every row equal to `nu`.
    pub fn constant(source: ScoreSet, nu: &Measure) -> Self {
        let probs = (0..source.len()).flat_map(|_| nu.weights.iter().copied()).collect();
        Self { source, target: nu.scores.clone(), probs }
    }

    pub fn source(&self) -> &ScoreSet {
        &self.source
    }

    pub fn target(&self) -> &ScoreSet {
        &self.target
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.target.len();
        &self.probs[i * m..(i + 1) * m]
    }

    pub fn row_measure(&self, i: usize) -> Measure {
        Measure::from_raw(self.target.clone(), self.row(i).to_vec())
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.source.len()).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.target.len() + j]
    }

    /// Apply `self` then `other`.
    pub fn compose(&self, other: &Transition) -> Result<Transition> {
        ensure_same(&self.target, &other.source)?;
        let (n, m, l) = (self.source.len(), self.target.len(), other.target.len());
        let mut probs = vec![0.0; n * l];
        for i in 0..n {
            for j in 0..m {
                let p = self.probs[i * m + j];
                if p == 0.0 {
                    continue;
                }
                for (o, q) in probs[i * l..(i + 1) * l].iter_mut().zip(other.row(j)) {
                    *o += p * q;
                }
            }
        }
        Ok(Self { source: self.source.clone(), target: other.target.clone(), probs })
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Transition, lambda: f64) -> Result<Transition> {
        ensure_same(&self.source, &other.source)?;
        ensure_same(&self.target, &other.target)?;
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Ok(Self { source: self.source.clone(), target: self.target.clone(), probs })
    }

    /// Higher scores map to stochastically higher rows.
    pub fn is_monotone(&self) -> bool {
        let cdfs: Vec<Vec<f64>> = (0..self.source.len()).map(|i| cdf_of(self.row(i))).collect();
        cdfs.windows(2).all(|w| cdf_leq(&w[1], &w[0]))
    }

    /// Each score moves only to scores no higher than itself.
    pub fn is_downward(&self) -> bool {
        if self.source != self.target {
            return false;
        }
        (0..self.source.len()).all(|i| self.row(i)[i + 1..].iter().sum::<f64>() <= PROB_TOL)
    }

    pub fn max_abs_diff(&self, other: &Transition) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn compose(first: &Transition, second: &Transition) -> Result<Transition> {
    first.compose(second)
}

pub fn push(mu: &Measure, k: &Transition) -> Result<Measure> {
    mu.push(k)
}

pub fn is_monotone(k: &Transition) -> bool {
    k.is_monotone()
}

pub fn is_downward(k: &Transition) -> bool {
    k.is_downward()
}
