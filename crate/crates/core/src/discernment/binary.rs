//! Pass/fail tests: valid conversions form a segment indexed by a mixing
//! weight, and each comparison type cuts that segment with a half-line.

use crate::PROB_TOL;

/// Constraint `slope * lambda <= bound` on the mixing weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfLine {
    pub slope: f64,
    pub bound: f64,
}

impl HalfLine {
    /// Violation at `lambda`; positive means violated.
    pub fn violation(&self, lambda: f64) -> f64 {
        self.slope * lambda - self.bound
    }
}

/// Constraint contributed by a comparison type with pass rates `q_tau` and
/// `q_psi`, when the reference type passes with `p_tau` and `p_psi`.
///
/// Returns the half-line and whether the `0/0 = 1` convention was used.
pub fn half_line(p_tau: f64, p_psi: f64, q_tau: f64, q_psi: f64) -> (HalfLine, bool) {
    if p_tau >= p_psi {
        // [l q_tau + (1 - l) p_tau] p_psi <= q_psi p_tau, divided by p_tau
        let degenerate = p_tau < PROB_TOL;
        let ratio = if degenerate { 1.0 } else { p_psi / p_tau };
        (HalfLine { slope: ratio * (q_tau - p_tau), bound: q_psi - p_psi }, degenerate)
    } else {
        // [l f'_tau + (1 - l) f_tau] f_psi >= f'_psi f_tau, divided by f_tau
        let (f_tau, f_psi) = (1.0 - p_tau, 1.0 - p_psi);
        let (g_tau, g_psi) = (1.0 - q_tau, 1.0 - q_psi);
        let ratio = f_psi / f_tau;
        (HalfLine { slope: -ratio * (g_tau - f_tau), bound: f_psi - g_psi }, false)
    }
}

/// Outcome of intersecting half-lines with `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Interval(f64, f64),
    /// Empty; carries the index of the constraint that emptied it.
    Empty(usize),
}

pub fn intersect(lines: &[HalfLine]) -> Segment {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for (i, h) in lines.iter().enumerate() {
        if h.slope.abs() <= PROB_TOL {
            if h.bound < -PROB_TOL {
                return Segment::Empty(i);
            }
            continue;
        }
        let r = h.bound / h.slope;
        if h.slope > 0.0 {
            hi = hi.min(r);
        } else {
            lo = lo.max(r);
        }
        if lo > hi + PROB_TOL {
            return Segment::Empty(i);
        }
    }
    if lo > hi {
        let mid = 0.5 * (lo + hi);
        return Segment::Interval(mid, mid);
    }
    Segment::Interval(lo, hi)
}

/// Mixing weight in `[0, 1]` that minimizes the largest violation, with
/// that violation.
pub fn least_violating(lines: &[HalfLine]) -> (f64, f64) {
    let worst = |l: f64| lines.iter().map(|h| h.violation(l)).fold(f64::NEG_INFINITY, f64::max);
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if worst(m1) <= worst(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let l = 0.5 * (a + b);
    (l, worst(l))
}
