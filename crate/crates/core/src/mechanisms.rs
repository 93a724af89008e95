//! Revenue-maximizing mechanisms when reports are authenticated: nonlinear
//! pricing, the sale of a single good, and an auction among independent
//! agents.

use std::cell::Cell;

use rayon::prelude::*;
use serde::Serialize;

use crate::continuous::{
    check_bounds, utility_envelope, virtual_value, virtual_value_table, ContinuousAuthRate, PrecisionKernel,
    TypeDistribution, VirtualValueTable,
};
use crate::numerics::{bisect_first, interp, trapezoid};
use crate::{Error, Result};

/// Smallest grid accepted by the solvers.
pub const MIN_GRID: usize = 51;

const MONOTONE_TOL: f64 = 1e-9;
const ROOT_TOL: f64 = 1e-12;

/// Production cost of quality or quantity.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunction {
    /// `coef * q^2 / 2`.
    Quadratic { coef: f64 },
    /// `coef * q^exponent / exponent` with `exponent > 1`.
    Power { coef: f64, exponent: f64 },
}

impl CostFunction {
    pub fn quadratic(coef: f64) -> Result<Self> {
        if !(coef > 0.0) || !coef.is_finite() {
            return Err(Error::InvalidInput("cost coefficient must be positive".into()));
        }
        Ok(Self::Quadratic { coef })
    }

    pub fn power(coef: f64, exponent: f64) -> Result<Self> {
        if !(coef > 0.0) || !(exponent > 1.0) || !coef.is_finite() || !exponent.is_finite() {
            return Err(Error::InvalidInput("power cost needs coef > 0 and exponent > 1".into()));
        }
        Ok(Self::Power { coef, exponent })
    }

    pub fn cost(&self, q: f64) -> f64 {
        match self {
            Self::Quadratic { coef } => 0.5 * coef * q * q,
            Self::Power { coef, exponent } => coef * q.powf(*exponent) / exponent,
        }
    }

    pub fn marginal(&self, q: f64) -> f64 {
        match self {
            Self::Quadratic { coef } => coef * q,
            Self::Power { coef, exponent } => coef * q.powf(exponent - 1.0),
        }
    }

    /// Quantity at which marginal cost equals `y >= 0`.
    pub fn inverse_marginal(&self, y: f64) -> f64 {
        let y = y.max(0.0);
        match self {
            Self::Quadratic { coef } => y / coef,
            Self::Power { coef, exponent } => (y / coef).powf(1.0 / (exponent - 1.0)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Pricing,
    SingleGood,
}

/// Diagnostics recorded by the solvers.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MechanismFlags {
    pub quantity_monotone: bool,
    pub transfers_monotone: bool,
    pub transfers_below_value: bool,
    pub degenerate: bool,
    /// Largest violation of the global upper bound on the authentication
    /// rate, once checked.
    pub upper_bound_violation: Option<f64>,
    /// The upper bound failed, so optimality is not guaranteed; the brute
    /// force check decides incentive compatibility.
    pub candidate: bool,
}

/// A direct mechanism tabulated on an evenly spaced grid of types.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolvedMechanism {
    pub kind: MechanismKind,
    pub theta: Vec<f64>,
    pub q: Vec<f64>,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_myerson: Vec<f64>,
    pub revenue: f64,
    /// Revenue computed as expected virtual surplus; agrees with `revenue`
    /// up to discretization error.
    pub virtual_surplus: f64,
    /// Lowest type served.
    pub threshold: Option<f64>,
    pub flags: MechanismFlags,
}

impl SolvedMechanism {
    /// Allocation at any type: interpolated between grid points, zero below
    /// the threshold.
    pub fn q_at(&self, x: f64) -> f64 {
        match (self.kind, self.threshold) {
            (_, None) => 0.0,
            (MechanismKind::SingleGood, Some(r)) => f64::from(x >= r),
            (MechanismKind::Pricing, Some(r)) if x < r => 0.0,
            (MechanismKind::Pricing, Some(_)) => interp(&self.theta, &self.q, x),
        }
    }

    /// Checks the global upper bound on `alpha` for the solved allocation and
    /// records the result in the flags.
    pub fn verify_upper_bound(
        &mut self,
        dist: &TypeDistribution,
        alpha: &ContinuousAuthRate,
        kernel: &PrecisionKernel,
        tol: f64,
    ) -> Result<f64> {
        if self.flags.degenerate {
            self.flags.upper_bound_violation = Some(0.0);
            return Ok(0.0);
        }
        let q = |x: f64| self.q_at(x);
        let report = check_bounds(dist, alpha, kernel, Some(&q), self.theta.len())?;
        let v = report.upper_bound_violation.unwrap_or(0.0);
        self.flags.upper_bound_violation = Some(v);
        self.flags.candidate = v > tol;
        if self.flags.candidate {
            log::warn!("global upper bound violated by {v:.3e}; solution is only a candidate");
        }
        Ok(v)
    }
}

fn check_grid(n: usize) -> Result<()> {
    if n < MIN_GRID {
        return Err(Error::InvalidInput(format!("grid must have at least {MIN_GRID} points")));
    }
    Ok(())
}

fn check_monotone(table: &VirtualValueTable) -> Result<()> {
    for i in 1..table.phi.len() {
        if table.phi[i] < table.phi[i - 1] - MONOTONE_TOL {
            return Err(Error::NonMonotoneVirtualValue { theta: table.theta[i] });
        }
    }
    Ok(())
}

/// Smallest type with nonnegative virtual value, or `None` if there is none.
fn threshold(dist: &TypeDistribution, kernel: &PrecisionKernel, table: &VirtualValueTable) -> Result<Option<f64>> {
    let last = table.phi.len() - 1;
    if table.phi[last] < 0.0 {
        return Ok(None);
    }
    if table.phi[0] >= 0.0 {
        return Ok(Some(table.theta[0]));
    }
    crossing(dist, kernel, table, 0.0).map(Some)
}

/// Smallest type whose virtual value reaches `level`, assuming the grid
/// brackets it.
fn crossing(dist: &TypeDistribution, kernel: &PrecisionKernel, table: &VirtualValueTable, level: f64) -> Result<f64> {
    let j = table.phi.iter().position(|p| *p >= level).unwrap();
    let err = Cell::new(None);
    let x = bisect_first(
        |x| match virtual_value(dist, kernel, x) {
            Ok(v) => v >= level,
            Err(e) => {
                err.set(Some(e));
                true
            }
        },
        table.theta[j - 1],
        table.theta[j],
        ROOT_TOL,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(x),
    }
}

/// Grid points with `extra` merged in, sorted and without duplicates.
fn with_point(grid: &[f64], extra: Option<f64>) -> Vec<f64> {
    let mut pts = grid.to_vec();
    if let Some(x) = extra {
        if !pts.contains(&x) {
            pts.push(x);
            pts.sort_by(f64::total_cmp);
        }
    }
    pts
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] - 1e-9)
}

fn degenerate(kind: MechanismKind, theta: f64, q: f64) -> SolvedMechanism {
    SolvedMechanism {
        kind,
        theta: vec![theta],
        q: vec![q],
        t: vec![theta * q],
        u: vec![0.0],
        phi: vec![theta],
        phi_myerson: vec![theta],
        revenue: theta * q,
        virtual_surplus: theta * q,
        threshold: Some(theta),
        flags: MechanismFlags {
            quantity_monotone: true,
            transfers_monotone: true,
            transfers_below_value: true,
            degenerate: true,
            ..Default::default()
        },
    }
}

/// Quality schedule with marginal cost equal to the positive part of the
/// virtual value, and transfers from the envelope formula.
pub fn solve_nonlinear_pricing(
    dist: &TypeDistribution,
    kernel: &PrecisionKernel,
    cost: &CostFunction,
    grid_n: usize,
) -> Result<SolvedMechanism> {
    if dist.is_degenerate() {
        let theta = dist.lo();
        let q = cost.inverse_marginal(theta);
        let mut m = degenerate(MechanismKind::Pricing, theta, q);
        m.revenue = theta * q - cost.cost(q);
        m.virtual_surplus = m.revenue;
        return Ok(m);
    }
    check_grid(grid_n)?;
    let table = virtual_value_table(dist, kernel, grid_n)?;
    check_monotone(&table)?;
    let cutoff = threshold(dist, kernel, &table)?;
    let pts = with_point(&table.theta, cutoff);
    let q_pts: Vec<f64> = pts
        .iter()
        .map(|&x| match table.theta.iter().position(|&g| g == x) {
            Some(i) => cost.inverse_marginal(table.phi[i]),
            None => 0.0,
        })
        .collect();
    let q_fn = |z: f64| interp(&pts, &q_pts, z);
    let u_pts = utility_envelope(kernel, &pts, q_fn, &pts)?;
    let t_pts: Vec<f64> = pts.iter().zip(&q_pts).zip(&u_pts).map(|((x, q), u)| x * q - u).collect();
    let profit: Vec<f64> = (0..pts.len()).map(|i| (t_pts[i] - cost.cost(q_pts[i])) * dist.pdf(pts[i])).collect();
    let surplus: Vec<f64> = (0..pts.len())
        .map(|i| {
            let phi = interp(&table.theta, &table.phi, pts[i]);
            (phi * q_pts[i] - cost.cost(q_pts[i])) * dist.pdf(pts[i])
        })
        .collect();
    let keep: Vec<usize> = (0..pts.len()).filter(|&i| table.theta.contains(&pts[i])).collect();
    let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let (q, t, u) = (pick(&q_pts), pick(&t_pts), pick(&u_pts));
    let flags = MechanismFlags {
        quantity_monotone: nondecreasing(&q),
        transfers_monotone: nondecreasing(&t),
        transfers_below_value: true,
        ..Default::default()
    };
    Ok(SolvedMechanism {
        kind: MechanismKind::Pricing,
        theta: table.theta,
        q,
        t,
        u,
        phi: table.phi,
        phi_myerson: table.phi_myerson,
        revenue: trapezoid(&pts, &profit),
        virtual_surplus: trapezoid(&pts, &surplus),
        threshold: cutoff,
        flags,
    })
}

/// Sell one good to every type with a nonnegative virtual value; the price
/// rises with the report when verification makes mimicry costly.
pub fn solve_single_good(dist: &TypeDistribution, kernel: &PrecisionKernel, grid_n: usize) -> Result<SolvedMechanism> {
    if dist.is_degenerate() {
        let theta = dist.lo();
        let q = if theta >= 0.0 { 1.0 } else { 0.0 };
        return Ok(degenerate(MechanismKind::SingleGood, theta, q));
    }
    check_grid(grid_n)?;
    let table = virtual_value_table(dist, kernel, grid_n)?;
    check_monotone(&table)?;
    let cutoff = threshold(dist, kernel, &table)?;
    let n = table.theta.len();
    let (mut q, mut t, mut u) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut revenue = 0.0;
    let mut virtual_surplus = 0.0;
    let mut below_value = true;
    if let Some(star) = cutoff {
        let pts = with_point(&table.theta, Some(star));
        let served: Vec<f64> = pts.into_iter().filter(|&x| x >= star).collect();
        let u_pts = utility_envelope(kernel, &served, |_| 1.0, &[])?;
        let t_pts: Vec<f64> = served.iter().zip(&u_pts).map(|(x, u)| x - u).collect();
        below_value = t_pts.iter().zip(&served).all(|(t, x)| *t <= x + 1e-12);
        let density: Vec<f64> = served.iter().map(|&x| dist.pdf(x)).collect();
        let paid: Vec<f64> = t_pts.iter().zip(&density).map(|(t, f)| t * f).collect();
        revenue = trapezoid(&served, &paid);
        let vs: Vec<f64> = served
            .iter()
            .zip(&density)
            .map(|(&x, f)| interp(&table.theta, &table.phi, x) * f)
            .collect();
        virtual_surplus = trapezoid(&served, &vs);
        for i in 0..n {
            if let Some(j) = served.iter().position(|&x| x == table.theta[i]) {
                q[i] = 1.0;
                t[i] = t_pts[j];
                u[i] = u_pts[j];
            }
        }
    }
    let flags = MechanismFlags {
        quantity_monotone: true,
        transfers_monotone: nondecreasing(&t),
        transfers_below_value: below_value,
        ..Default::default()
    };
    Ok(SolvedMechanism {
        kind: MechanismKind::SingleGood,
        theta: table.theta,
        q,
        t,
        u,
        phi: table.phi,
        phi_myerson: table.phi_myerson,
        revenue,
        virtual_surplus,
        threshold: cutoff,
        flags,
    })
}

/// One bidder in an auction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bidder {
    pub dist: TypeDistribution,
    pub kernel: PrecisionKernel,
}

/// Interim allocation and payments of one bidder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BidderSolution {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_myerson: Vec<f64>,
    /// Lowest type that can win, if any.
    pub reserve: Option<f64>,
    /// Interim probability of winning.
    pub q: Vec<f64>,
    /// Interim expected payment.
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub revenue: f64,
    /// Knots used for interpolation between grid points.
    knots: Vec<f64>,
    knot_q: Vec<f64>,
    knot_u: Vec<f64>,
}

impl BidderSolution {
    fn phi_at(&self, x: f64) -> f64 {
        interp(&self.theta, &self.phi, x)
    }

    /// Interim winning probability at any type.
    pub fn q_at(&self, x: f64) -> f64 {
        match self.reserve {
            Some(r) if x >= r => interp(&self.knots, &self.knot_q, x),
            _ => 0.0,
        }
    }

    /// Payment when winning with type `x`.
    pub fn price_when_winning(&self, x: f64) -> f64 {
        let q = self.q_at(x);
        if q <= 0.0 {
            return x;
        }
        x - interp(&self.knots, &self.knot_u, x) / q
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuctionSolution {
    pub bidders: Vec<BidderSolution>,
    pub revenue: f64,
}

impl AuctionSolution {
    /// Bidder with the highest positive virtual value; ties go to the lowest
    /// index.
    pub fn winner(&self, types: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, (b, &x)) in self.bidders.iter().zip(types).enumerate() {
            let v = b.phi_at(x);
            if v > 0.0 && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Payments of every bidder at a type profile.
    pub fn transfers(&self, types: &[f64]) -> Vec<f64> {
        let w = self.winner(types);
        (0..self.bidders.len())
            .map(|i| if Some(i) == w { self.bidders[i].price_when_winning(types[i]) } else { 0.0 })
            .collect()
    }
}

/// Smallest type of bidder `j` whose virtual value reaches `level`, clamped
/// to the type interval.
fn inverse_virtual_value(b: &Bidder, table: &VirtualValueTable, level: f64) -> Result<f64> {
    let n = table.phi.len();
    if table.phi[0] >= level {
        return Ok(table.theta[0]);
    }
    if table.phi[n - 1] < level {
        return Ok(table.theta[n - 1]);
    }
    crossing(&b.dist, &b.kernel, table, level)
}

/// The good goes to the bidder with the highest positive virtual value;
/// payments follow from each bidder's envelope formula.
pub fn solve_auction(bidders: &[Bidder], grid_n: usize) -> Result<AuctionSolution> {
    if bidders.is_empty() {
        return Err(Error::InvalidInput("no bidders".into()));
    }
    check_grid(grid_n)?;
    let tables = bidders
        .iter()
        .map(|b| {
            if b.dist.is_degenerate() {
                return Err(Error::InvalidInput("auction bidders need non-degenerate type intervals".into()));
            }
            let t = virtual_value_table(&b.dist, &b.kernel, grid_n)?;
            check_monotone(&t)?;
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(bidders.len());
    for (i, b) in bidders.iter().enumerate() {
        let table = &tables[i];
        let reserve = threshold(&b.dist, &b.kernel, table)?;
        let interim = |x: f64| -> Result<f64> {
            let level = virtual_value(&b.dist, &b.kernel, x)?.max(0.0);
            let mut p = 1.0;
            for (j, other) in bidders.iter().enumerate() {
                if j != i {
                    p *= other.dist.cdf(inverse_virtual_value(other, &tables[j], level)?);
                }
            }
            Ok(p)
        };
        let (knots, knot_q, knot_u) = match reserve {
            Some(r) => {
                let knots: Vec<f64> = with_point(&table.theta, Some(r)).into_iter().filter(|&x| x >= r).collect();
                let knot_q = knots.par_iter().map(|&x| interim(x)).collect::<Result<Vec<_>>>()?;
                let q_fn = |z: f64| interp(&knots, &knot_q, z);
                let knot_u = utility_envelope(&b.kernel, &knots, q_fn, &knots)?;
                (knots, knot_q, knot_u)
            }
            None => (vec![table.theta[0]], vec![0.0], vec![0.0]),
        };
        let paid: Vec<f64> = (0..knots.len())
            .map(|k| (knots[k] * knot_q[k] - knot_u[k]) * b.dist.pdf(knots[k]))
            .collect();
        let revenue = if reserve.is_some() { trapezoid(&knots, &paid) } else { 0.0 };
        let mut sol = BidderSolution {
            theta: table.theta.clone(),
            phi: table.phi.clone(),
            phi_myerson: table.phi_myerson.clone(),
            reserve,
            q: Vec::new(),
            t: Vec::new(),
            u: Vec::new(),
            revenue,
            knots,
            knot_q,
            knot_u,
        };
        sol.q = sol.theta.iter().map(|&x| sol.q_at(x)).collect();
        sol.u = sol
            .theta
            .iter()
            .map(|&x| if sol.q_at(x) > 0.0 { interp(&sol.knots, &sol.knot_u, x) } else { 0.0 })
            .collect();
        sol.t = sol.theta.iter().zip(&sol.q).zip(&sol.u).map(|((x, q), u)| x * q - u).collect();
        out.push(sol);
    }
    let revenue = out.iter().map(|b| b.revenue).sum();
    Ok(AuctionSolution { bidders: out, revenue })
}

/// Integrates `integrand` against the product of the bidders' densities on
/// a tensor grid with `n` points per bidder, by the trapezoid rule.
pub fn product_grid_expectation<F: Fn(&[f64]) -> f64 + Sync>(bidders: &[Bidder], n: usize, integrand: F) -> f64 {
    let grids: Vec<Vec<f64>> = bidders
        .iter()
        .map(|b| crate::numerics::linspace(b.dist.lo(), b.dist.hi(), n))
        .collect();
    let weights: Vec<Vec<f64>> = grids
        .iter()
        .zip(bidders)
        .map(|(g, b)| {
            let h = (g[g.len() - 1] - g[0]) / (g.len() - 1) as f64;
            g.iter()
                .enumerate()
                .map(|(k, &x)| {
                    let w = if k == 0 || k == g.len() - 1 { 0.5 * h } else { h };
                    w * b.dist.pdf(x)
                })
                .collect()
        })
        .collect();
    let total = n.pow(bidders.len() as u32);
    (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut point = Vec::with_capacity(bidders.len());
            let mut w = 1.0;
            for (g, wt) in grids.iter().zip(&weights) {
                let k = idx % n;
                idx /= n;
                point.push(g[k]);
                w *= wt[k];
            }
            w * integrand(&point)
        })
        .sum()
}
