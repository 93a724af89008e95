//! Dense two-phase simplex for small linear programs.
//!
//! Pivots follow Bland's rule, so degenerate problems terminate.

use crate::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
/// Infeasibility a ratio-test step may introduce in exchange for a larger pivot.
const RATIO_SLACK: f64 = 1e-12;
const MAX_PIVOTS: usize = 200_000;
/// Largest constraint violation accepted in a returned solution.
const CHECK_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

/// Minimize `objective . x` subject to linear constraints and `x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, objective: vec![0.0; num_vars], rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective(&mut self, c: Vec<f64>) {
        assert_eq!(c.len(), self.num_vars);
        self.objective = c;
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push(Row { coeffs, relation, rhs });
    }

    /// Largest violation of the constraints (and of nonnegativity) at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|v| -v).fold(0.0, f64::max);
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match r.relation {
                Relation::Le => lhs - r.rhs,
                Relation::Ge => r.rhs - lhs,
                Relation::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    /// `m` rows of `cols + 1` entries; the last entry is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars;
        let slack_rows: Vec<usize> =
            (0..lp.rows.len()).filter(|&i| lp.rows[i].relation != Relation::Eq).collect();
        let first_artificial = n + slack_rows.len();
        let mut rows = Vec::with_capacity(lp.rows.len());
        let mut basis = Vec::with_capacity(lp.rows.len());
        let mut needs_artificial = Vec::new();
        let mut slack_col = n;
        for (i, r) in lp.rows.iter().enumerate() {
            let mut coeffs = r.coeffs.clone();
            let mut rhs = r.rhs;
            if r.relation == Relation::Ge {
                coeffs.iter_mut().for_each(|a| *a = -*a);
                rhs = -rhs;
            }
            let mut slack = None;
            if r.relation != Relation::Eq {
                slack = Some(slack_col);
                slack_col += 1;
            }
            let mut sign = 1.0;
            if rhs < 0.0 {
                coeffs.iter_mut().for_each(|a| *a = -*a);
                rhs = -rhs;
                sign = -1.0;
            }
            rows.push((coeffs, slack, sign, rhs));
            match slack {
                Some(s) if sign > 0.0 => basis.push(s),
                _ => {
                    basis.push(usize::MAX);
                    needs_artificial.push(i);
                }
            }
        }
        let cols = first_artificial + needs_artificial.len();
        let mut t = vec![vec![0.0; cols + 1]; rows.len()];
        for (i, (coeffs, slack, sign, rhs)) in rows.into_iter().enumerate() {
            t[i][..n].copy_from_slice(&coeffs);
            if let Some(s) = slack {
                t[i][s] = sign;
            }
            t[i][cols] = rhs;
        }
        for (k, &i) in needs_artificial.iter().enumerate() {
            let col = first_artificial + k;
            t[i][col] = 1.0;
            basis[i] = col;
        }
        Self { t, basis, cols, first_artificial, pivots: 0 }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        self.t[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, q) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * q;
                }
                row[c] = 0.0;
                // roundoff below zero would feed negative ratios later
                let rhs = &mut row[self.cols];
                if *rhs < 0.0 && *rhs > -FEAS_EPS {
                    *rhs = 0.0;
                }
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[f64], allowed: usize) -> Vec<f64> {
        let mut d: Vec<f64> = cost[..allowed].to_vec();
        for (row, &b) in self.t.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    /// Runs simplex iterations over columns `< allowed`. Returns false when
    /// the objective is unbounded below.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<bool> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::LinearProgram("pivot limit reached".into()));
            }
            let d = self.reduced_costs(cost, allowed);
            let Some(enter) = (0..allowed).find(|&j| d[j] < -PIVOT_EPS) else {
                return Ok(true);
            };
            // two passes: the smallest ratio with a little slack, then the
            // largest pivot entry among rows within that bound
            let bound = self
                .t
                .iter()
                .filter(|row| row[enter] > PIVOT_EPS)
                .map(|row| (row[self.cols].max(0.0) + RATIO_SLACK) / row[enter])
                .fold(f64::INFINITY, f64::min);
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[enter];
                if a > PIVOT_EPS && row[self.cols].max(0.0) / a <= bound {
                    let better = match leave {
                        None => true,
                        Some((li, la)) => a > la || (a == la && self.basis[i] < self.basis[li]),
                    };
                    if better {
                        leave = Some((i, a));
                    }
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, enter),
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        if self.first_artificial < self.cols {
            let mut cost = vec![0.0; self.cols];
            cost[self.first_artificial..].iter_mut().for_each(|c| *c = 1.0);
            self.optimize(&cost, self.cols)?;
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.t)
                .filter(|(b, _)| **b >= self.first_artificial)
                .map(|(_, row)| row[self.cols])
                .sum();
            if infeasibility > FEAS_EPS {
                return Ok(LpOutcome::Infeasible);
            }
            let mut r = 0;
            while r < self.t.len() {
                if self.basis[r] >= self.first_artificial {
                    // the artificial sits at a level below FEAS_EPS; drop that
                    // residue and pivot on the largest entry
                    let col = (0..self.first_artificial)
                        .max_by(|&a, &b| self.t[r][a].abs().total_cmp(&self.t[r][b].abs()))
                        .filter(|&j| self.t[r][j].abs() > 1e-9);
                    match col {
                        Some(c) => {
                            self.t[r][self.cols] = 0.0;
                            self.pivot(r, c)
                        }
                        None => {
                            self.t.remove(r);
                            self.basis.remove(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
        }
        let mut cost = vec![0.0; self.cols];
        cost[..lp.num_vars].copy_from_slice(&lp.objective);
        if !self.optimize(&cost, self.first_artificial)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; lp.num_vars];
        for (row, &b) in self.t.iter().zip(&self.basis) {
            if b < lp.num_vars {
                x[b] = row[self.cols].max(0.0);
            }
        }
        let violation = lp.max_violation(&x);
        if violation > CHECK_EPS {
            return Err(Error::LinearProgram(format!("solution violates a constraint by {violation:.3e}")));
        }
        let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        Ok(LpOutcome::Optimal { x, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // maximize 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![-3.0, -5.0]);
        lp.add(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add(vec![3.0, 2.0], Relation::Le, 18.0);
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
                assert!((value + 36.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equalities_and_lower_bounds() {
        let mut lp = LinearProgram::new(3);
        lp.set_objective(vec![1.0, 2.0, 3.0]);
        lp.add(vec![1.0, 1.0, 1.0], Relation::Eq, 1.0);
        lp.add(vec![0.0, 1.0, 1.0], Relation::Ge, 0.5);
        let LpOutcome::Optimal { x, value } = lp.solve().unwrap() else { panic!() };
        assert!((value - 1.5).abs() < 1e-12, "{x:?}");
        assert!(lp.max_violation(&x) < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![1.0], Relation::Ge, 2.0);
        lp.add(vec![1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![-1.0, 0.0]);
        lp.add(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.add(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add(vec![2.0, 2.0], Relation::Eq, 2.0);
        lp.add(vec![1.0, 0.0], Relation::Eq, 0.25);
        let LpOutcome::Optimal { x, .. } = lp.solve().unwrap() else { panic!() };
        assert!((x[1] - 0.75).abs() < 1e-12);
    }
}
