//! Passage matrices and the discernment order on tests.
//!
//! Test `tau` is more discerning than `psi` at type `theta` when some
//! monotone score conversion turns `theta`'s performance on `tau` into its
//! performance on `psi` while leaving every other type no better off than
//! on `psi` itself.

pub mod binary;
mod general;

use std::collections::HashSet;

use serde::Serialize;

use crate::markov::{fosd_geq, fq_compose, Measure, ScoreSet, Transition};
use crate::numerics::{one_sided_derivative, FD_STEP};
use crate::{Error, Result, PROB_TOL};

use binary::{half_line, intersect, HalfLine, Segment};

/// Performance distributions of every type on every test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PassageMatrix {
    types: Vec<String>,
    tests: Vec<String>,
    scores: ScoreSet,
    /// Indexed `[test * types + type]`.
    dists: Vec<Measure>,
}

fn check_labels(kind: &str, labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidInput(format!("no {kind}s")));
    }
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::InvalidInput(format!("duplicate {kind} label `{l}`")));
        }
    }
    Ok(())
}

impl PassageMatrix {
    /// `dists[test][type]` is the score distribution of that type on that test.
    pub fn new(types: Vec<String>, tests: Vec<String>, dists: Vec<Vec<Measure>>) -> Result<Self> {
        check_labels("type", &types)?;
        check_labels("test", &tests)?;
        if dists.len() != tests.len() || dists.iter().any(|r| r.len() != types.len()) {
            return Err(Error::InvalidInput("distribution table does not match labels".into()));
        }
        let scores = dists[0][0].scores().clone();
        let dists: Vec<Measure> = dists.into_iter().flatten().collect();
        if dists.iter().any(|m| *m.scores() != scores) {
            return Err(Error::ScoreSetMismatch);
        }
        Ok(Self { types, tests, scores, dists })
    }

    /// Pass/fail tests; `rates[test][type]` is a pass probability.
    pub fn binary(types: Vec<String>, tests: Vec<String>, rates: Vec<Vec<f64>>) -> Result<Self> {
        let dists = rates
            .iter()
            .map(|row| row.iter().map(|&p| Measure::bernoulli(p)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(types, tests, dists)
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn tests(&self) -> &[String] {
        &self.tests
    }

    pub fn scores(&self) -> &ScoreSet {
        &self.scores
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn num_tests(&self) -> usize {
        self.tests.len()
    }

    pub fn is_binary(&self) -> bool {
        self.scores.is_binary()
    }

    pub fn dist(&self, test: usize, ty: usize) -> &Measure {
        &self.dists[test * self.types.len() + ty]
    }

    /// Mass on the top score.
    pub fn pass_rate(&self, test: usize, ty: usize) -> f64 {
        self.dist(test, ty).top_mass()
    }

    pub fn type_index(&self, label: &str) -> Result<usize> {
        self.types
            .iter()
            .position(|t| t == label)
            .ok_or_else(|| Error::UnknownLabel { kind: "type", label: label.into() })
    }

    pub fn test_index(&self, label: &str) -> Result<usize> {
        self.tests
            .iter()
            .position(|t| t == label)
            .ok_or_else(|| Error::UnknownLabel { kind: "test", label: label.into() })
    }

    fn check_indices(&self, theta: usize, tests: &[usize]) -> Result<()> {
        if theta >= self.num_types() {
            return Err(Error::InvalidInput(format!("type index {theta} out of range")));
        }
        if let Some(t) = tests.iter().find(|&&t| t >= self.num_tests()) {
            return Err(Error::InvalidInput(format!("test index {t} out of range")));
        }
        Ok(())
    }
}

/// Result of a discernment check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscernmentWitness {
    pub holds: bool,
    /// Valid mixing weights between the distribution-quantile conversion
    /// and the constant conversion; pass/fail tests only.
    pub lambda_interval: Option<(f64, f64)>,
    /// A valid conversion when the relation holds.
    pub conversion: Option<Transition>,
    /// The `0/0 = 1` convention was needed because `theta` never passes.
    pub degenerate: bool,
    /// A type whose constraint rules out every conversion (pass/fail tests).
    pub blocking_type: Option<usize>,
}

/// Conversion `lambda * FQ + (1 - lambda) * const(psi | theta)` for the
/// pair `(tau, psi)` at `theta`.
pub fn mixed_conversion(env: &PassageMatrix, theta: usize, tau: usize, psi: usize, lambda: f64) -> Result<Transition> {
    let from = env.dist(tau, theta);
    let to = env.dist(psi, theta);
    let fq = fq_compose(from, to)?;
    fq.mix(&Transition::constant(env.scores().clone(), to), lambda)
}

/// Half-lines in the mixing weight, one per type, for pass/fail tests.
fn constraints(env: &PassageMatrix, theta: usize, tau: usize, psi: usize) -> (Vec<HalfLine>, bool) {
    let p_tau = env.pass_rate(tau, theta);
    let p_psi = env.pass_rate(psi, theta);
    let mut degenerate = false;
    let lines = (0..env.num_types())
        .map(|t| {
            let (h, d) = half_line(p_tau, p_psi, env.pass_rate(tau, t), env.pass_rate(psi, t));
            degenerate |= d;
            h
        })
        .collect();
    (lines, degenerate)
}

fn binary_check(env: &PassageMatrix, theta: usize, tau: usize, psi: usize, extra: &[HalfLine]) -> Result<DiscernmentWitness> {
    let (mut lines, degenerate) = constraints(env, theta, tau, psi);
    let n = lines.len();
    lines.extend_from_slice(extra);
    match intersect(&lines) {
        Segment::Interval(lo, hi) => {
            let k = mixed_conversion(env, theta, tau, psi, 0.5 * (lo + hi))?;
            Ok(DiscernmentWitness {
                holds: true,
                lambda_interval: Some((lo, hi)),
                conversion: Some(k),
                degenerate,
                blocking_type: None,
            })
        }
        Segment::Empty(i) => Ok(DiscernmentWitness {
            holds: false,
            lambda_interval: None,
            conversion: None,
            degenerate,
            blocking_type: (i < n).then_some(i),
        }),
    }
}

/// Is `tau` at least as discerning as `psi` at `theta`?
///
/// Pass/fail tests use the closed-form segment of conversions; other score
/// sets solve a linear feasibility problem.
pub fn check_discerning(env: &PassageMatrix, theta: usize, tau: usize, psi: usize) -> Result<DiscernmentWitness> {
    env.check_indices(theta, &[tau, psi])?;
    if env.is_binary() {
        binary_check(env, theta, tau, psi, &[])
    } else {
        check_discerning_lp(env, theta, tau, psi)
    }
}

/// Label-based form of [`check_discerning`].
pub fn check_discerning_labels(env: &PassageMatrix, theta: &str, tau: &str, psi: &str) -> Result<DiscernmentWitness> {
    check_discerning(env, env.type_index(theta)?, env.test_index(tau)?, env.test_index(psi)?)
}

/// The linear-programming path, usable on any score set.
pub fn check_discerning_lp(env: &PassageMatrix, theta: usize, tau: usize, psi: usize) -> Result<DiscernmentWitness> {
    env.check_indices(theta, &[tau, psi])?;
    let k = general::find_conversion(env, theta, tau, psi)?;
    Ok(DiscernmentWitness {
        holds: k.is_some(),
        lambda_interval: None,
        conversion: k,
        degenerate: false,
        blocking_type: None,
    })
}

/// Mixing-weight interval recovered from the linear program, for pass/fail
/// tests. `None` when no conversion exists.
pub fn lp_lambda_interval(env: &PassageMatrix, theta: usize, tau: usize, psi: usize) -> Result<Option<(f64, f64)>> {
    env.check_indices(theta, &[tau, psi])?;
    let fq = mixed_conversion(env, theta, tau, psi, 1.0)?;
    let flat = mixed_conversion(env, theta, tau, psi, 0.0)?;
    let n = env.scores().len();
    let mut dir = Vec::with_capacity(n * n);
    let mut base = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = fq.prob(i, j) - flat.prob(i, j);
            base += d * flat.prob(i, j);
            dir.push(d);
        }
    }
    let norm: f64 = dir.iter().map(|d| d * d).sum();
    if norm < PROB_TOL * PROB_TOL {
        return Ok(check_discerning_lp(env, theta, tau, psi)?.holds.then_some((0.0, 1.0)));
    }
    Ok(general::functional_range(env, theta, tau, psi, &dir)?
        .map(|(lo, hi)| (((lo - base) / norm).clamp(0.0, 1.0), ((hi - base) / norm).clamp(0.0, 1.0))))
}

/// Largest violation of the conversion conditions by `k`: monotonicity,
/// exact reproduction at `theta`, and dominance at every other type.
pub fn conversion_violation(env: &PassageMatrix, theta: usize, tau: usize, psi: usize, k: &Transition) -> Result<f64> {
    let mut worst: f64 = 0.0;
    if !k.is_monotone() {
        let cdfs: Vec<Vec<f64>> = (0..k.source().len()).map(|i| k.row_measure(i).cdf()).collect();
        for w in cdfs.windows(2) {
            for (hi, lo) in w[1].iter().zip(&w[0]) {
                worst = worst.max(hi - lo);
            }
        }
    }
    let image = env.dist(tau, theta).push(k)?;
    worst = worst.max(image.max_abs_diff(env.dist(psi, theta)));
    for t in 0..env.num_types() {
        let image = env.dist(tau, t).push(k)?.cdf();
        let target = env.dist(psi, t).cdf();
        for (have, want) in image.iter().zip(&target) {
            worst = worst.max(want - have);
        }
    }
    Ok(worst)
}

/// `theta` does worst on `tau` among all types.
pub fn is_minimal(env: &PassageMatrix, theta: usize, tau: usize) -> bool {
    let own = env.dist(tau, theta);
    (0..env.num_types()).all(|t| fosd_geq(env.dist(tau, t), own).unwrap_or(false))
}

fn same_row(env: &PassageMatrix, tau: usize, psi: usize) -> bool {
    (0..env.num_types()).all(|t| env.dist(tau, t).max_abs_diff(env.dist(psi, t)) <= PROB_TOL)
}

/// Equivalence at `theta`: the rows coincide, or `theta` is minimal on both.
/// Score sets other than pass/fail fall back to checking both directions.
pub fn check_equivalent(env: &PassageMatrix, theta: usize, tau: usize, psi: usize) -> Result<bool> {
    env.check_indices(theta, &[tau, psi])?;
    if !env.is_binary() {
        return Ok(check_discerning(env, theta, tau, psi)?.holds && check_discerning(env, theta, psi, tau)?.holds);
    }
    Ok(same_row(env, tau, psi) || (is_minimal(env, theta, tau) && is_minimal(env, theta, psi)))
}

/// How two tests compare at a type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    StrictlyMore,
    Equivalent,
    StrictlyLess,
    Incomparable,
}

pub fn compare(env: &PassageMatrix, theta: usize, tau: usize, psi: usize) -> Result<Comparison> {
    let ab = check_discerning(env, theta, tau, psi)?.holds;
    let ba = check_discerning(env, theta, psi, tau)?.holds;
    Ok(match (ab, ba) {
        (true, true) => Comparison::Equivalent,
        (true, false) => Comparison::StrictlyMore,
        (false, true) => Comparison::StrictlyLess,
        (false, false) => Comparison::Incomparable,
    })
}

/// `table[theta][tau][psi]` is whether `tau` is at least as discerning as
/// `psi` at `theta`.
pub fn relation_table(env: &PassageMatrix) -> Result<Vec<Vec<Vec<bool>>>> {
    (0..env.num_types())
        .map(|th| {
            (0..env.num_tests())
                .map(|a| (0..env.num_tests()).map(|b| Ok(check_discerning(env, th, a, b)?.holds)).collect())
                .collect()
        })
        .collect()
}

/// Tests at least as discerning as every test at `theta`.
pub fn most_discerning_tests(env: &PassageMatrix, theta: usize) -> Result<Vec<usize>> {
    env.check_indices(theta, &[])?;
    let mut out = Vec::new();
    'outer: for tau in 0..env.num_tests() {
        for psi in 0..env.num_tests() {
            if psi != tau && !check_discerning(env, theta, tau, psi)?.holds {
                continue 'outer;
            }
        }
        out.push(tau);
    }
    Ok(out)
}

/// One most-discerning test per type (the lowest index), if every type has
/// one.
pub fn most_discerning_function(env: &PassageMatrix) -> Result<Option<Vec<usize>>> {
    let mut out = Vec::with_capacity(env.num_types());
    for theta in 0..env.num_types() {
        match most_discerning_tests(env, theta)?.first() {
            Some(&t) => out.push(t),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

/// First `(theta, psi)` at which `assignment[theta]` fails to be at least as
/// discerning as `psi`.
pub fn first_failure(env: &PassageMatrix, assignment: &[usize]) -> Result<Option<(usize, usize)>> {
    if assignment.len() != env.num_types() {
        return Err(Error::InvalidInput("one test per type expected".into()));
    }
    for (theta, &tau) in assignment.iter().enumerate() {
        for psi in 0..env.num_tests() {
            if !check_discerning(env, theta, tau, psi)?.holds {
                return Ok(Some((theta, psi)));
            }
        }
    }
    Ok(None)
}

/// Whether `assignment[theta]` is most discerning at every type.
pub fn is_most_discerning_function(env: &PassageMatrix, assignment: &[usize]) -> Result<bool> {
    Ok(first_failure(env, assignment)?.is_none())
}

/// Allowance for finite-difference error in the limiting constraints.
const LIMIT_SLACK: f64 = 1e-8;

/// Pass/fail discernment on a continuum of types, represented by a grid
/// plus the two limiting constraints as comparison types approach `theta`
/// from either side.
///
/// `theta` must be an interior grid point; pass rates must be
/// differentiable from each side at `theta`.
pub fn check_discerning_on_interval<T, P>(grid: &[f64], theta: f64, tau: T, psi: P) -> Result<DiscernmentWitness>
where
    T: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let idx = grid
        .iter()
        .position(|&g| g == theta)
        .ok_or_else(|| Error::InvalidInput(format!("{theta} is not a grid point")))?;
    if idx == 0 || idx + 1 == grid.len() {
        return Err(Error::InvalidInput("reference type must be interior".into()));
    }
    let types = grid.iter().map(|g| format!("{g}")).collect();
    let env = PassageMatrix::binary(
        types,
        vec!["tau".into(), "psi".into()],
        vec![grid.iter().map(|&g| tau(g)).collect(), grid.iter().map(|&g| psi(g)).collect()],
    )?;
    let (p_tau, p_psi) = (tau(theta), psi(theta));
    // Divide the half-line for a nearby type by its distance and take limits.
    let unit = half_line(p_tau, p_psi, p_tau + 1.0, p_psi).0.slope;
    let limits: Vec<HalfLine> = [true, false]
        .into_iter()
        .map(|right| {
            let d_tau = one_sided_derivative(&tau, theta, FD_STEP, right);
            let d_psi = one_sided_derivative(&psi, theta, FD_STEP, right);
            let s = if right { 1.0 } else { -1.0 };
            // the limits often pin the weight exactly; allow for derivative roundoff
            HalfLine { slope: s * unit * d_tau, bound: s * d_psi + LIMIT_SLACK * d_psi.abs().max(1.0) }
        })
        .collect();
    binary_check(&env, idx, 0, 1, &limits)
}
