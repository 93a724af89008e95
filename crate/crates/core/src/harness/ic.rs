use rayon::prelude::*;
use serde::Serialize;

use crate::authentication::FiniteAuthRate;
use crate::continuous::ContinuousAuthRate;
use crate::mechanisms::{AuctionSolution, SolvedMechanism};
use crate::{Error, Result};

/// Pairs listed individually in a report; the rest are only counted.
const MAX_LISTED: usize = 64;

/// Where authentication probabilities come from.
#[derive(Clone, Copy, Debug)]
pub enum AuthSource<'a> {
    Continuous(&'a ContinuousAuthRate),
    /// Indexed by grid position, so the grid must have one point per type.
    Finite(&'a FiniteAuthRate),
}

impl AuthSource<'_> {
    fn alpha(&self, report: usize, ty: usize, theta: &[f64]) -> f64 {
        match self {
            Self::Continuous(a) => a.alpha(theta[report], theta[ty]),
            Self::Finite(a) => a.get(report, ty),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IcReport {
    /// Largest gain from misreporting, `max(0, alpha * v - U)`.
    pub ic_violation: f64,
    /// Largest loss from participating when authenticated.
    pub ir_violation: f64,
    /// Largest gain from failing the test on purpose after a truthful report.
    pub shirk_violation: f64,
    /// `(type, report)` indices of the largest misreporting gain.
    pub worst_pair: Option<(usize, usize)>,
    pub worst_ir_type: Option<usize>,
    /// `(type, report)` pairs where the constraint holds with equality up to
    /// the tolerance; at most 64 are listed.
    pub binding: Vec<(usize, usize)>,
    pub binding_count: usize,
    pub tol: f64,
    pub passed: bool,
}

struct Row {
    ic: f64,
    report: Option<usize>,
    binding: Vec<usize>,
    ir: f64,
    shirk: f64,
}

/// Exhaustive check of every `(type, report)` pair for a direct mechanism
/// `(q, t)` on a grid of types.
pub fn check_ic(theta: &[f64], q: &[f64], t: &[f64], auth: AuthSource<'_>, tol: f64) -> Result<IcReport> {
    let n = theta.len();
    if q.len() != n || t.len() != n || n == 0 {
        return Err(Error::InvalidInput("mechanism arrays must match the grid".into()));
    }
    if let AuthSource::Finite(a) = auth {
        if a.num_types() != n {
            return Err(Error::InvalidInput(format!("authentication rate has {} types, grid has {n}", a.num_types())));
        }
    }
    let rows: Vec<Row> = (0..n)
        .into_par_iter()
        .map(|i| {
            let net = theta[i] * q[i] - t[i];
            let own = auth.alpha(i, i, theta) * net;
            let mut row = Row { ic: 0.0, report: None, binding: Vec::new(), ir: (-net).max(0.0), shirk: (-own).max(0.0) };
            let mut best = f64::NEG_INFINITY;
            for j in (0..n).filter(|&j| j != i) {
                let gain = auth.alpha(j, i, theta) * (theta[i] * q[j] - t[j]) - own;
                if gain > best {
                    best = gain;
                    row.report = Some(j);
                }
                if gain.abs() <= tol {
                    row.binding.push(j);
                }
            }
            row.ic = best.max(0.0);
            row
        })
        .collect();
    let mut report = IcReport {
        ic_violation: 0.0,
        ir_violation: 0.0,
        shirk_violation: 0.0,
        worst_pair: None,
        worst_ir_type: None,
        binding: Vec::new(),
        binding_count: 0,
        tol,
        passed: false,
    };
    let mut best_gain = f64::NEG_INFINITY;
    for (i, row) in rows.iter().enumerate() {
        if row.ic > best_gain {
            best_gain = row.ic;
            report.worst_pair = row.report.map(|j| (i, j));
        }
        if row.ir > report.ir_violation {
            report.ir_violation = row.ir;
            report.worst_ir_type = Some(i);
        }
        report.ic_violation = report.ic_violation.max(row.ic);
        report.shirk_violation = report.shirk_violation.max(row.shirk);
        report.binding_count += row.binding.len();
        for &j in &row.binding {
            if report.binding.len() < MAX_LISTED {
                report.binding.push((i, j));
            }
        }
    }
    report.passed = report.ic_violation <= tol && report.ir_violation <= tol && report.shirk_violation <= tol;
    Ok(report)
}

pub fn check_mechanism_ic(mech: &SolvedMechanism, auth: AuthSource<'_>, tol: f64) -> Result<IcReport> {
    check_ic(&mech.theta, &mech.q, &mech.t, auth, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuctionIcReport {
    pub bidders: Vec<IcReport>,
    /// Largest amount by which a winner pays more than its type.
    pub ex_post_violation: f64,
    pub passed: bool,
}

/// Interim incentive compatibility of every bidder, and ex post
/// participation of winners.
pub fn check_auction_ic(sol: &AuctionSolution, auths: &[ContinuousAuthRate], tol: f64) -> Result<AuctionIcReport> {
    if auths.len() != sol.bidders.len() {
        return Err(Error::InvalidInput("one authentication rate per bidder is required".into()));
    }
    let bidders = sol
        .bidders
        .iter()
        .zip(auths)
        .map(|(b, a)| check_ic(&b.theta, &b.q, &b.t, AuthSource::Continuous(a), tol))
        .collect::<Result<Vec<_>>>()?;
    let ex_post_violation = sol
        .bidders
        .iter()
        .flat_map(|b| b.theta.iter().map(move |&x| if b.q_at(x) > 0.0 { b.price_when_winning(x) - x } else { 0.0 }))
        .fold(0.0, f64::max);
    let passed = bidders.iter().all(|r| r.passed) && ex_post_violation <= tol;
    Ok(AuctionIcReport { bidders, ex_post_violation, passed })
}
