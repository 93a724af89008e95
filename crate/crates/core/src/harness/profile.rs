use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::discernment::{check_discerning, PassageMatrix};
use crate::markov::{fq_compose, Measure, ScoreSet};
use crate::{Error, Result, PROB_TOL};

const SUM_TOL: f64 = 1e-9;

/// A finite single-agent profile: messages, a testing rule, a decision rule
/// and the agent's reporting and performance strategies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteProfile {
    pub env: PassageMatrix,
    pub messages: Vec<String>,
    pub decisions: Vec<String>,
    /// `[decision][type]`.
    pub utility: Vec<Vec<f64>>,
    /// `[type][message]`.
    pub reporting: Vec<Vec<f64>>,
    /// `[message][test]`.
    pub testing: Vec<Vec<f64>>,
    /// `[message][test][score][decision]`.
    pub decision: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[type][message][test]`.
    pub performance: Vec<Vec<Vec<Measure>>>,
}

fn check_dist(row: &[f64], what: &str) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if row.iter().any(|&v| !(v >= -PROB_TOL) || !v.is_finite()) || (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidInput(format!("{what} is not a probability distribution")));
    }
    Ok(())
}

fn check_len<T>(v: &[T], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidInput(format!("{what} has length {}, expected {n}", v.len())));
    }
    Ok(())
}

/// Value of a score distribution when scores are worth `v`.
fn value_of(p: &Measure, v: &[f64]) -> f64 {
    p.weights().iter().zip(v).map(|(w, x)| w * x).sum()
}

/// Best value over all measures dominated by `pi`: each score can be
/// lowered to the best score beneath it.
fn best_value(pi: &Measure, v: &[f64]) -> f64 {
    let mut run = f64::NEG_INFINITY;
    pi.weights()
        .iter()
        .zip(v)
        .map(|(w, &x)| {
            run = run.max(x);
            w * run
        })
        .sum()
}

impl FiniteProfile {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        env: PassageMatrix,
        messages: Vec<String>,
        decisions: Vec<String>,
        utility: Vec<Vec<f64>>,
        reporting: Vec<Vec<f64>>,
        testing: Vec<Vec<f64>>,
        decision: Vec<Vec<Vec<Vec<f64>>>>,
        performance: Vec<Vec<Vec<Measure>>>,
    ) -> Result<Self> {
        let (nt, nm, nk, ns, nx) =
            (env.num_types(), messages.len(), env.num_tests(), env.scores().len(), decisions.len());
        if nm == 0 || nx == 0 {
            return Err(Error::InvalidInput("a profile needs messages and decisions".into()));
        }
        check_len(&utility, nx, "utility")?;
        for row in &utility {
            check_len(row, nt, "utility row")?;
        }
        check_len(&reporting, nt, "reporting strategy")?;
        for row in &reporting {
            check_len(row, nm, "reporting row")?;
            check_dist(row, "reporting row")?;
        }
        check_len(&testing, nm, "testing rule")?;
        for row in &testing {
            check_len(row, nk, "testing row")?;
            check_dist(row, "testing row")?;
        }
        check_len(&decision, nm, "decision rule")?;
        for per_test in &decision {
            check_len(per_test, nk, "decision rule")?;
            for per_score in per_test {
                check_len(per_score, ns, "decision rule")?;
                for row in per_score {
                    check_len(row, nx, "decision row")?;
                    check_dist(row, "decision row")?;
                }
            }
        }
        check_len(&performance, nt, "performance strategy")?;
        for (ty, per_msg) in performance.iter().enumerate() {
            check_len(per_msg, nm, "performance strategy")?;
            for per_test in per_msg {
                check_len(per_test, nk, "performance strategy")?;
                for (test, p) in per_test.iter().enumerate() {
                    if !env.dist(test, ty).fosd_geq(p)? {
                        return Err(Error::InvalidInput(format!(
                            "performance of {} on {} exceeds its passage rate",
                            env.types()[ty],
                            env.tests()[test]
                        )));
                    }
                }
            }
        }
        Ok(Self { env, messages, decisions, utility, reporting, testing, decision, performance })
    }

    /// Direct, truthful, full-effort profile. `testing` is `[type][test]`
    /// and `decision` is `[type][test][score][decision]`.
    pub fn canonical(
        env: PassageMatrix,
        decisions: Vec<String>,
        utility: Vec<Vec<f64>>,
        testing: Vec<Vec<f64>>,
        decision: Vec<Vec<Vec<Vec<f64>>>>,
    ) -> Result<Self> {
        let n = env.num_types();
        let reporting = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let performance = (0..n)
            .map(|ty| (0..n).map(|_| (0..env.num_tests()).map(|k| env.dist(k, ty).clone()).collect()).collect())
            .collect();
        let messages = env.types().to_vec();
        Self::new(env, messages, decisions, utility, reporting, testing, decision, performance)
    }

    pub fn num_types(&self) -> usize {
        self.env.num_types()
    }

    pub fn num_messages(&self) -> usize {
        self.messages.len()
    }

    pub fn num_tests(&self) -> usize {
        self.env.num_tests()
    }

    pub fn num_decisions(&self) -> usize {
        self.decisions.len()
    }

    /// Messages are types, reports are truthful and effort is full.
    pub fn is_canonical(&self) -> bool {
        let n = self.num_types();
        self.num_messages() == n
            && (0..n).all(|i| (0..n).all(|j| (self.reporting[i][j] - if i == j { 1.0 } else { 0.0 }).abs() <= PROB_TOL))
            && (0..n).all(|ty| {
                (0..self.num_tests()).all(|k| self.performance[ty][ty][k].max_abs_diff(self.env.dist(k, ty)) <= PROB_TOL)
            })
    }

    /// Utility of `ty` for each score after sending `message` and taking
    /// `test`.
    pub fn decision_values(&self, ty: usize, message: usize, test: usize) -> Vec<f64> {
        self.decision[message][test]
            .iter()
            .map(|row| row.iter().enumerate().map(|(x, w)| w * self.utility[x][ty]).sum())
            .collect()
    }

    /// Distribution over decisions induced for each type, `[type][decision]`.
    pub fn scf(&self) -> Vec<Vec<f64>> {
        (0..self.num_types())
            .map(|ty| {
                let mut out = vec![0.0; self.num_decisions()];
                for m in 0..self.num_messages() {
                    let r = self.reporting[ty][m];
                    if r == 0.0 {
                        continue;
                    }
                    for k in 0..self.num_tests() {
                        let w = r * self.testing[m][k];
                        if w == 0.0 {
                            continue;
                        }
                        for (s, ps) in self.performance[ty][m][k].weights().iter().enumerate() {
                            for (x, o) in out.iter_mut().enumerate() {
                                *o += w * ps * self.decision[m][k][s][x];
                            }
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// Expected utility of each type under the profile's own strategies.
    pub fn equilibrium_payoffs(&self) -> Vec<f64> {
        self.scf()
            .iter()
            .enumerate()
            .map(|(ty, f)| f.iter().enumerate().map(|(x, w)| w * self.utility[x][ty]).sum())
            .collect()
    }

    /// Payoff of `ty` from `message` with the best performance on every test.
    fn best_message_value(&self, ty: usize, message: usize) -> f64 {
        (0..self.num_tests())
            .filter(|&k| self.testing[message][k] > 0.0)
            .map(|k| self.testing[message][k] * best_value(self.env.dist(k, ty), &self.decision_values(ty, message, k)))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationReport {
    pub equilibrium: Vec<f64>,
    /// Best payoff from any pure report combined with the best performance.
    pub best_deviation: Vec<f64>,
    pub best_message: Vec<usize>,
    pub max_gain: f64,
    pub worst_type: Option<usize>,
    /// Largest gain from changing performance on any test after a message
    /// the type actually sends, including tests it is never assigned.
    pub shirk_gain: f64,
    /// `(type, message, test)` of the largest performance gain.
    pub shirk_at: Option<(usize, usize, usize)>,
    pub tol: f64,
    pub incentive_compatible: bool,
}

/// Compares each type's equilibrium payoff with every pure report followed
/// by an optimal performance on each test. Effort is checked on every test
/// after every message the type sends.
pub fn exhaustive_deviation_search(p: &FiniteProfile, tol: f64) -> DeviationReport {
    let equilibrium = p.equilibrium_payoffs();
    let per_type: Vec<(f64, usize, f64, Option<(usize, usize)>)> = (0..p.num_types())
        .into_par_iter()
        .map(|ty| {
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for m in 0..p.num_messages() {
                let v = p.best_message_value(ty, m);
                if v > best {
                    best = v;
                    arg = m;
                }
            }
            let (mut shirk, mut at) = (0.0, None);
            for m in (0..p.num_messages()).filter(|&m| p.reporting[ty][m] > 0.0) {
                for k in 0..p.num_tests() {
                    let v = p.decision_values(ty, m, k);
                    let gain = best_value(p.env.dist(k, ty), &v) - value_of(&p.performance[ty][m][k], &v);
                    if gain > shirk {
                        shirk = gain;
                        at = Some((m, k));
                    }
                }
            }
            (best, arg, shirk, at)
        })
        .collect();
    let best_deviation: Vec<f64> = per_type.iter().map(|r| r.0).collect();
    let best_message = per_type.iter().map(|r| r.1).collect();
    let (mut max_gain, mut worst_type) = (0.0, None);
    for (ty, (b, e)) in best_deviation.iter().zip(&equilibrium).enumerate() {
        if b - e > max_gain {
            max_gain = b - e;
            worst_type = Some(ty);
        }
    }
    let (mut shirk_gain, mut shirk_at) = (0.0, None);
    for (ty, r) in per_type.iter().enumerate() {
        if r.2 > shirk_gain {
            shirk_gain = r.2;
            shirk_at = r.3.map(|(m, k)| (ty, m, k));
        }
    }
    DeviationReport {
        equilibrium,
        best_deviation,
        best_message,
        max_gain,
        worst_type,
        shirk_gain,
        shirk_at,
        tol,
        incentive_compatible: max_gain <= tol && shirk_gain <= tol,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CanonicalReport {
    pub original_incentive_compatible: bool,
    pub original_gain: f64,
    /// Largest difference between the two social choice functions.
    pub scf_difference: f64,
    pub canonical_incentive_compatible: bool,
    pub canonical_gain: f64,
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

/// Direct, truthful, full-effort profile implementing the same social choice
/// function. The report records whether the input was an equilibrium; the
/// construction runs either way.
pub fn canonicalize(p: &FiniteProfile, tol: f64) -> Result<(FiniteProfile, CanonicalReport)> {
    let original = exhaustive_deviation_search(p, tol);
    let (nt, nm, nk, ns, nx) = (p.num_types(), p.num_messages(), p.num_tests(), p.env.scores().len(), p.num_decisions());
    let mut testing = vec![vec![0.0; nk]; nt];
    let mut decision = vec![vec![vec![vec![0.0; nx]; ns]; nk]; nt];
    for ty in 0..nt {
        for k in 0..nk {
            let joint: Vec<f64> = (0..nm).map(|m| p.reporting[ty][m] * p.testing[m][k]).collect();
            let marginal: f64 = joint.iter().sum();
            testing[ty][k] = marginal;
            if marginal <= PROB_TOL {
                // never assigned: a rule that ignores the score leaves
                // nothing to gain from shirking
                let flat = p.decision[0][k][ns - 1].clone();
                decision[ty][k].iter_mut().for_each(|row| *row = flat.clone());
                continue;
            }
            let h: Vec<f64> = joint.iter().map(|w| w / marginal).collect();
            let pi = p.env.dist(k, ty);
            for m in (0..nm).filter(|&m| h[m] > 0.0) {
                let d = fq_compose(pi, &p.performance[ty][m][k])?;
                for s in 0..ns {
                    for s2 in 0..ns {
                        let w = h[m] * d.prob(s, s2);
                        if w == 0.0 {
                            continue;
                        }
                        for x in 0..nx {
                            decision[ty][k][s][x] += w * p.decision[m][k][s2][x];
                        }
                    }
                }
            }
        }
        let total: f64 = testing[ty].iter().sum();
        testing[ty].iter_mut().for_each(|w| *w /= total);
    }
    for row in decision.iter_mut().flatten().flatten() {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|w| *w /= total);
    }
    let out = FiniteProfile::canonical(p.env.clone(), p.decisions.clone(), p.utility.clone(), testing, decision)?;
    let check = exhaustive_deviation_search(&out, tol);
    let report = CanonicalReport {
        original_incentive_compatible: original.incentive_compatible,
        original_gain: original.max_gain.max(original.shirk_gain),
        scf_difference: max_diff(&p.scf(), &out.scf()),
        canonical_incentive_compatible: check.incentive_compatible,
        canonical_gain: check.max_gain.max(check.shirk_gain),
    };
    log::debug!("canonicalized profile: {report:?}");
    Ok((out, report))
}

/// Rewrites a canonical profile so that each type is always assigned
/// `assignment[type]`, converting its score into a score on every test the
/// original rule could assign. Each new test must discern the type at least
/// as well as every test it replaces.
pub fn retarget_tests(p: &FiniteProfile, assignment: &[usize]) -> Result<FiniteProfile> {
    if !p.is_canonical() {
        return Err(Error::InvalidInput("test retargeting needs a canonical profile".into()));
    }
    let (nt, nk, ns, nx) = (p.num_types(), p.num_tests(), p.env.scores().len(), p.num_decisions());
    check_len(assignment, nt, "test assignment")?;
    if assignment.iter().any(|&k| k >= nk) {
        return Err(Error::InvalidInput("test index out of range".into()));
    }
    let mut testing = vec![vec![0.0; nk]; nt];
    let mut decision = vec![vec![vec![vec![0.0; nx]; ns]; nk]; nt];
    for ty in 0..nt {
        let target = assignment[ty];
        testing[ty][target] = 1.0;
        for psi in (0..nk).filter(|&k| p.testing[ty][k] > 0.0) {
            let w = check_discerning(&p.env, ty, target, psi)?;
            let Some(k) = w.conversion.filter(|_| w.holds) else {
                return Err(Error::NotDiscerning {
                    type_label: p.env.types()[ty].clone(),
                    test: p.env.tests()[target].clone(),
                    against: p.env.tests()[psi].clone(),
                });
            };
            for s in 0..ns {
                for s2 in 0..ns {
                    let weight = p.testing[ty][psi] * k.prob(s, s2);
                    for x in 0..nx {
                        decision[ty][target][s][x] += weight * p.decision[ty][psi][s2][x];
                    }
                }
            }
        }
        for row in decision[ty][target].iter_mut() {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= total);
        }
        // unassigned tests never happen; make them ignore the score
        let fallback = decision[ty][target][0].clone();
        for k in (0..nk).filter(|&k| k != target) {
            decision[ty][k] = vec![fallback.clone(); ns];
        }
    }
    FiniteProfile::canonical(p.env.clone(), p.decisions.clone(), p.utility.clone(), testing, decision)
}

/// Sizes of a randomly generated profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProfileShape {
    pub types: usize,
    pub messages: usize,
    pub tests: usize,
    pub decisions: usize,
}

fn random_dist<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    if rng.random_bool(0.3) {
        let i = rng.random_range(0..n);
        return (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect();
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// A random pass/fail profile in which every type best-responds: it mixes
/// over its best messages and performs optimally on every test, randomizing
/// effort whenever passing and failing are worth the same.
pub fn random_equilibrium_profile<R: Rng + ?Sized>(rng: &mut R, shape: ProfileShape) -> Result<FiniteProfile> {
    let ProfileShape { types: nt, messages: nm, tests: nk, decisions: nx } = shape;
    if nt == 0 || nm == 0 || nk == 0 || nx == 0 {
        return Err(Error::InvalidInput("profile dimensions must be positive".into()));
    }
    let rates: Vec<Vec<f64>> = (0..nk)
        .map(|_| {
            (0..nt)
                .map(|_| match rng.random_range(0..10) {
                    0 => 0.0,
                    1 => 1.0,
                    _ => rng.random(),
                })
                .collect()
        })
        .collect();
    let env = PassageMatrix::binary(labels("theta", nt), labels("tau", nk), rates)?;
    let utility: Vec<Vec<f64>> = (0..nx).map(|_| (0..nt).map(|_| rng.random()).collect()).collect();
    let mut testing: Vec<Vec<f64>> = Vec::with_capacity(nm);
    let mut decision: Vec<Vec<Vec<Vec<f64>>>> = Vec::with_capacity(nm);
    for m in 0..nm {
        if m > 0 && rng.random_bool(0.25) {
            testing.push(testing[m - 1].clone());
            decision.push(decision[m - 1].clone());
            continue;
        }
        testing.push(random_dist(rng, nk));
        decision.push(
            (0..nk)
                .map(|_| {
                    let fail = random_dist(rng, nx);
                    let pass = if rng.random_bool(0.3) { fail.clone() } else { random_dist(rng, nx) };
                    vec![fail, pass]
                })
                .collect(),
        );
    }
    let scores = ScoreSet::binary();
    let mut performance = Vec::with_capacity(nt);
    let mut reporting = Vec::with_capacity(nt);
    for ty in 0..nt {
        let mut per_msg = Vec::with_capacity(nm);
        let mut values = Vec::with_capacity(nm);
        for m in 0..nm {
            let mut per_test = Vec::with_capacity(nk);
            let mut total = 0.0;
            for k in 0..nk {
                let pass = env.pass_rate(k, ty);
                let v: Vec<f64> = decision[m][k]
                    .iter()
                    .map(|row| row.iter().enumerate().map(|(x, w)| w * utility[x][ty]).sum())
                    .collect();
                let effort = if v[1] > v[0] {
                    1.0
                } else if v[1] < v[0] {
                    0.0
                } else {
                    rng.random()
                };
                let p = Measure::new(scores.clone(), vec![1.0 - effort * pass, effort * pass])?;
                total += testing[m][k] * value_of(&p, &v);
                per_test.push(p);
            }
            per_msg.push(per_test);
            values.push(total);
        }
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let support: Vec<usize> = (0..nm).filter(|&m| values[m] >= best - PROB_TOL).collect();
        let weights: Vec<f64> = support.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = weights.iter().sum();
        let mut row = vec![0.0; nm];
        for (m, w) in support.iter().zip(weights) {
            row[*m] = w / total;
        }
        reporting.push(row);
        performance.push(per_msg);
    }
    FiniteProfile::new(env, labels("m", nm), labels("x", nx), utility, reporting, testing, decision, performance)
}

/// [`random_equilibrium_profile`] driven by a seeded generator.
pub fn seeded_equilibrium_profile(seed: u64, shape: ProfileShape) -> Result<FiniteProfile> {
    random_equilibrium_profile(&mut ChaCha8Rng::seed_from_u64(seed), shape)
}
