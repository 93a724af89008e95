//! Score conversions on arbitrary finite score sets as a linear feasibility
//! problem, solved with lazily added dominance constraints.

use super::PassageMatrix;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::markov::{cdf_of, Transition};
use crate::Result;

const CUT_TOL: f64 = 1e-11;
const CUTS_PER_ROUND: usize = 16;

struct Problem<'a> {
    env: &'a PassageMatrix,
    theta: usize,
    tau: usize,
    psi: usize,
    n: usize,
}

impl Problem<'_> {
    fn var(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    fn base(&self) -> LinearProgram {
        let n = self.n;
        let mut lp = LinearProgram::new(n * n);
        for i in 0..n {
            let mut c = vec![0.0; n * n];
            (0..n).for_each(|j| c[self.var(i, j)] = 1.0);
            lp.add(c, Relation::Eq, 1.0);
        }
        let from = self.env.dist(self.tau, self.theta).weights();
        let to = self.env.dist(self.psi, self.theta).weights();
        for j in 0..n {
            let mut c = vec![0.0; n * n];
            (0..n).for_each(|i| c[self.var(i, j)] = from[i]);
            lp.add(c, Relation::Eq, to[j]);
        }
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let mut c = vec![0.0; n * n];
                for l in 0..=j {
                    c[self.var(i + 1, l)] += 1.0;
                    c[self.var(i, l)] -= 1.0;
                }
                lp.add(c, Relation::Le, 0.0);
            }
        }
        lp
    }

    fn add_dominance(&self, lp: &mut LinearProgram, other: usize) {
        let n = self.n;
        let from = self.env.dist(self.tau, other).weights();
        let target = self.env.dist(self.psi, other).cdf();
        for j in 0..n - 1 {
            let mut c = vec![0.0; n * n];
            for (i, &p) in from.iter().enumerate() {
                for l in 0..=j {
                    c[self.var(i, l)] += p;
                }
            }
            lp.add(c, Relation::Ge, target[j]);
        }
    }

    /// How far the converted performance of `other` rises above its
    /// performance on the target test.
    fn dominance_gap(&self, other: usize, k: &[f64]) -> f64 {
        let n = self.n;
        let from = self.env.dist(self.tau, other).weights();
        let mut converted = vec![0.0; n];
        for (i, &p) in from.iter().enumerate() {
            for j in 0..n {
                converted[j] += p * k[self.var(i, j)];
            }
        }
        let have = cdf_of(&converted);
        let want = self.env.dist(self.psi, other).cdf();
        have.iter().zip(&want).map(|(h, w)| w - h).fold(0.0, f64::max)
    }

    fn solve(&self, objective: Option<Vec<f64>>) -> Result<Option<Vec<f64>>> {
        let mut active = vec![false; self.env.num_types()];
        active[self.theta] = true;
        loop {
            let mut lp = self.base();
            if let Some(c) = &objective {
                lp.set_objective(c.clone());
            }
            for (t, _) in active.iter().enumerate().filter(|(_, a)| **a) {
                self.add_dominance(&mut lp, t);
            }
            let x = match lp.solve()? {
                LpOutcome::Optimal { x, .. } => x,
                LpOutcome::Infeasible => return Ok(None),
                LpOutcome::Unbounded => unreachable!("conversion polytope is bounded"),
            };
            let mut gaps: Vec<(usize, f64)> = (0..active.len())
                .filter(|&t| !active[t])
                .map(|t| (t, self.dominance_gap(t, &x)))
                .filter(|(_, g)| *g > CUT_TOL)
                .collect();
            if gaps.is_empty() {
                return Ok(Some(x));
            }
            gaps.sort_by(|a, b| b.1.total_cmp(&a.1));
            for (t, _) in gaps.into_iter().take(CUTS_PER_ROUND) {
                active[t] = true;
            }
        }
    }
}

fn tidy(n: usize, mut x: Vec<f64>) -> Vec<Vec<f64>> {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    x.chunks(n)
        .map(|row| {
            let s: f64 = row.iter().sum();
            row.iter().map(|v| v / s).collect()
        })
        .collect()
}

/// Some monotone conversion from `tau` to `psi` that keeps the performance
/// of `theta` and does not raise any other type above its `psi` performance.
pub(super) fn find_conversion(env: &PassageMatrix, theta: usize, tau: usize, psi: usize) -> Result<Option<Transition>> {
    let n = env.scores().len();
    let p = Problem { env, theta, tau, psi, n };
    Ok(match p.solve(None)? {
        Some(x) => Some(Transition::new(env.scores().clone(), env.scores().clone(), tidy(n, x))?),
        None => None,
    })
}

/// Range of `<k, direction>` over all valid conversions `k`.
pub(super) fn functional_range(
    env: &PassageMatrix,
    theta: usize,
    tau: usize,
    psi: usize,
    direction: &[f64],
) -> Result<Option<(f64, f64)>> {
    let n = env.scores().len();
    let p = Problem { env, theta, tau, psi, n };
    let dot = |x: &[f64]| x.iter().zip(direction).map(|(a, b)| a * b).sum::<f64>();
    let Some(low) = p.solve(Some(direction.to_vec()))? else {
        return Ok(None);
    };
    let neg: Vec<f64> = direction.iter().map(|d| -d).collect();
    let high = p.solve(Some(neg))?.expect("feasible region was non-empty");
    Ok(Some((dot(&low), dot(&high))))
}
