//! Adaptive quadrature and one-sided finite differences.

use crate::{Error, Result};

/// Absolute tolerance used for quadrature throughout the crate.
pub const QUAD_TOL: f64 = 1e-9;

const MAX_DEPTH: u32 = 50;
const MAX_EVALS: usize = 200_000;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return adaptive_simpson(f, b, a, tol).map(|v| -v);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3;
    let v = simpson_step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut evals);
    if evals > MAX_EVALS || !v.is_finite() {
        return Err(Error::Quadrature { lo: a, hi: b });
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || *evals > MAX_EVALS || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals)
}

/// Integrates over `[a, b]`, splitting at the given interior breakpoints.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    pts.sort_by(f64::total_cmp);
    let pieces = pts.len() + 1;
    let mut total = 0.0;
    let mut lo = a;
    for hi in pts.into_iter().chain(std::iter::once(b)) {
        total += adaptive_simpson(&f, lo, hi, tol / pieces as f64)?;
        lo = hi;
    }
    Ok(total)
}

/// Composite Simpson rule on `2 * half_panels` intervals.
pub fn composite_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, half_panels: usize) -> f64 {
    let n = 2 * half_panels.max(1);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Trapezoid rule on tabulated values.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Default finite-difference step.
pub const FD_STEP: f64 = 1e-6;

/// One-sided derivative of `f` at `x` with one Richardson refinement.
/// `right` selects the direction.
pub fn one_sided_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64, right: bool) -> f64 {
    let s = if right { 1.0 } else { -1.0 };
    let fx = f(x);
    let d = |step: f64| s * (f(x + s * step) - fx) / step;
    2.0 * d(0.5 * h) - d(h)
}

/// `n` evenly spaced points from `lo` to `hi`; a single point when they
/// coincide or `n == 1`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect()
}

/// Linear interpolation on sorted knots, clamped at the ends.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

/// Bisection for the smallest `x` in `[lo, hi]` with `pred(x)` true, for a
/// predicate that is monotone in `x`.
pub fn bisect_first<P: Fn(f64) -> bool>(pred: P, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    if pred(lo) {
        return lo;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_matches_closed_forms() {
        let v = adaptive_simpson(|x: f64| x.exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
        let v = adaptive_simpson(|x: f64| (-1e6 * x).exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1e-6).abs() < 1e-11);
        let v = integrate_split(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-12).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-12);
    }

    #[test]
    fn richardson_is_exact_for_quadratics() {
        let f = |x: f64| 3.0 * x * x - x;
        let d = one_sided_derivative(f, 0.5, FD_STEP, true);
        assert!((d - 2.0).abs() < 1e-7);
        let k = |x: f64| 1.0 - (x - 0.5).abs();
        assert!((one_sided_derivative(k, 0.5, FD_STEP, true) + 1.0).abs() < 1e-9);
        assert!((one_sided_derivative(k, 0.5, FD_STEP, false) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grid_helpers() {
        let g = linspace(0.25, 0.75, 51);
        assert_eq!(g.len(), 51);
        assert_eq!(g[50], 0.75);
        assert!((interp(&[0.0, 1.0, 3.0], &[0.0, 2.0, 0.0], 2.0) - 1.0).abs() < 1e-15);
        let x = bisect_first(|x| x * x >= 2.0, 0.0, 2.0, 1e-13);
        assert!((x - 2f64.sqrt()).abs() < 1e-12);
        assert!((trapezoid(&[0.0, 1.0], &[1.0, 3.0]) - 2.0).abs() < 1e-15);
        assert!((composite_simpson(|x| x * x, 0.0, 1.0, 2) - 1.0 / 3.0).abs() < 1e-15);
    }
}
