//! Oracles shared by the integration tests.
#![allow(dead_code)]

use veritest_core::markov::Transition;

/// Valid `(fail row, pass row)` pass probabilities of a binary conversion,
/// found without the closed form: parametrize the line fixed by the
/// equality at `theta`, locate a feasible point by maximizing the smallest
/// slack, then bisect outward.
pub fn enumerated_segment(p_tau: f64, p_psi: f64, others: &[(f64, f64)]) -> Option<((f64, f64), (f64, f64))> {
    let point = |t: f64| -> (f64, f64) {
        if p_tau > 0.5 {
            (t, (p_psi - (1.0 - p_tau) * t) / p_tau)
        } else {
            ((p_psi - p_tau * t) / (1.0 - p_tau), t)
        }
    };
    let slack = |t: f64| -> f64 {
        let (a, b) = point(t);
        let mut s = a.min(1.0 - b).min(b - a).min(1.0 - a).min(b);
        for &(q_tau, q_psi) in others {
            s = s.min(q_psi - (q_tau * b + (1.0 - q_tau) * a));
        }
        s
    };
    // coarse dense scan, then golden-section refinement of the concave slack
    let grid = 4001;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..grid {
        let t = i as f64 / (grid - 1) as f64;
        let s = slack(t);
        if s > best.0 {
            best = (s, t);
        }
    }
    let (mut lo, mut hi) = ((best.1 - 1.0 / (grid - 1) as f64).max(0.0), (best.1 + 1.0 / (grid - 1) as f64).min(1.0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if slack(x1) < slack(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let peak = 0.5 * (lo + hi);
    if slack(peak) < -1e-12 {
        return None;
    }
    // a tolerance on the slack is stretched by the parametrization, so edges
    // only allow roundoff whenever the peak is feasible
    let floor = slack(peak).min(0.0) - 1e-15;
    let edge = |towards: f64| -> f64 {
        if slack(towards) >= floor {
            return towards;
        }
        let (mut inside, mut outside) = (peak, towards);
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if slack(mid) >= floor {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    Some((point(edge(0.0)), point(edge(1.0))))
}

pub fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = dx * dx + dy * dy;
    let t = if len == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len).clamp(0.0, 1.0) };
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

pub fn hausdorff(s: ((f64, f64), (f64, f64)), r: ((f64, f64), (f64, f64))) -> f64 {
    [
        segment_distance(s.0, r.0, r.1),
        segment_distance(s.1, r.0, r.1),
        segment_distance(r.0, s.0, s.1),
        segment_distance(r.1, s.0, s.1),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Pass probabilities of the fail and pass rows of a conversion.
pub fn rows(k: &Transition) -> (f64, f64) {
    (k.prob(0, 1), k.prob(1, 1))
}

