//! Interval type spaces: type distributions, authentication rates, their
//! local precision, and the virtual value that accounts for verification.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::numerics::{integrate_split, interp, linspace, one_sided_derivative, FD_STEP, QUAD_TOL};
use crate::{Error, Result};

/// Precision below this (in absolute value) counts as zero rather than an
/// error.
const NEGATIVE_PRECISION_TOL: f64 = 1e-8;

/// Knots used to tabulate the precision of a black-box authentication rate.
const PRECISION_SAMPLES: usize = 2001;

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::InvalidInput(format!("invalid type interval [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_knots(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::InvalidInput("need at least two knots with matching values".into()));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) || xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("knots must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Distribution of the agent's type on a compact interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeDistribution {
    Uniform { lo: f64, hi: f64 },
    /// Density proportional to `exp(-rate * (x - lo))`.
    TruncatedExponential { lo: f64, hi: f64, rate: f64 },
    /// Piecewise-linear density through the given knots, normalized.
    Tabulated { points: Vec<f64>, density: Vec<f64>, cumulative: Vec<f64> },
}

impl TypeDistribution {
    /// Uniform on `[lo, hi]`; `lo == hi` gives a point mass.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        Ok(Self::Uniform { lo, hi })
    }

    pub fn truncated_exponential(lo: f64, hi: f64, rate: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        if lo == hi || !rate.is_finite() {
            return Err(Error::InvalidInput("truncated exponential needs lo < hi and finite rate".into()));
        }
        Ok(Self::TruncatedExponential { lo, hi, rate })
    }

    pub fn tabulated(points: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        check_knots(&points, &density)?;
        if density.iter().any(|d| *d <= 0.0) {
            return Err(Error::InvalidInput("tabulated density must be positive".into()));
        }
        let mut cumulative = vec![0.0];
        for i in 0..points.len() - 1 {
            let h = points[i + 1] - points[i];
            cumulative.push(cumulative[i] + 0.5 * h * (density[i] + density[i + 1]));
        }
        let total = *cumulative.last().unwrap();
        let density = density.into_iter().map(|d| d / total).collect();
        let cumulative = cumulative.into_iter().map(|c| c / total).collect();
        Ok(Self::Tabulated { points, density, cumulative })
    }

    pub fn lo(&self) -> f64 {
        match self {
            Self::Uniform { lo, .. } | Self::TruncatedExponential { lo, .. } => *lo,
            Self::Tabulated { points, .. } => points[0],
        }
    }

    pub fn hi(&self) -> f64 {
        match self {
            Self::Uniform { hi, .. } | Self::TruncatedExponential { hi, .. } => *hi,
            Self::Tabulated { points, .. } => points[points.len() - 1],
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo() == self.hi()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lo() || x > self.hi() {
            return 0.0;
        }
        match self {
            Self::Uniform { lo, hi } => 1.0 / (hi - lo),
            Self::TruncatedExponential { lo, hi, rate } => {
                if rate.abs() < 1e-12 {
                    1.0 / (hi - lo)
                } else {
                    rate * (-rate * (x - lo)).exp() / -(-rate * (hi - lo)).exp_m1()
                }
            }
            Self::Tabulated { points, density, .. } => interp(points, density, x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo() {
            return if self.is_degenerate() && x >= self.lo() { 1.0 } else { 0.0 };
        }
        if x >= self.hi() {
            return 1.0;
        }
        match self {
            Self::Uniform { lo, hi } => (x - lo) / (hi - lo),
            Self::TruncatedExponential { lo, hi, rate } => {
                if rate.abs() < 1e-12 {
                    (x - lo) / (hi - lo)
                } else {
                    (-rate * (x - lo)).exp_m1() / (-rate * (hi - lo)).exp_m1()
                }
            }
            Self::Tabulated { points, density, cumulative } => {
                let i = points.partition_point(|&p| p <= x) - 1;
                let t = x - points[i];
                let h = points[i + 1] - points[i];
                cumulative[i] + density[i] * t + (density[i + 1] - density[i]) * t * t / (2.0 * h)
            }
        }
    }

    /// Points where the density has a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Tabulated { points, .. } => points.clone(),
            _ => Vec::new(),
        }
    }
}

/// A nonnegative rate on an interval, with exact integrals.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrecisionFn {
    Constant { value: f64 },
    /// Linear between knots, constant beyond them.
    PiecewiseLinear { xs: Vec<f64>, ys: Vec<f64>, cumulative: Vec<f64> },
}

impl PrecisionFn {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidInput(format!("precision {value} must be finite and nonnegative")));
        }
        Ok(Self::Constant { value })
    }

    pub fn piecewise_linear(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_knots(&xs, &ys)?;
        if let Some(i) = ys.iter().position(|y| *y < 0.0) {
            return Err(Error::NegativePrecision { theta: xs[i], value: ys[i] });
        }
        let mut cumulative = vec![0.0];
        for i in 0..xs.len() - 1 {
            cumulative.push(cumulative[i] + 0.5 * (xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]));
        }
        Ok(Self::PiecewiseLinear { xs, ys, cumulative })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::PiecewiseLinear { xs, ys, .. } => interp(xs, ys, x),
        }
    }

    fn antiderivative(&self, x: f64) -> f64 {
        match self {
            Self::Constant { value } => value * x,
            Self::PiecewiseLinear { xs, ys, cumulative } => {
                let last = xs.len() - 1;
                if x <= xs[0] {
                    return (x - xs[0]) * ys[0];
                }
                if x >= xs[last] {
                    return cumulative[last] + (x - xs[last]) * ys[last];
                }
                let i = xs.partition_point(|&p| p <= x) - 1;
                let t = x - xs[i];
                let h = xs[i + 1] - xs[i];
                cumulative[i] + ys[i] * t + (ys[i + 1] - ys[i]) * t * t / (2.0 * h)
            }
        }
    }

    /// Integral over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Self::Constant { value } => value * (b - a),
            _ => self.antiderivative(b) - self.antiderivative(a),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Self::Constant { value } => Self::Constant { value: value * s },
            Self::PiecewiseLinear { xs, ys, cumulative } => Self::PiecewiseLinear {
                xs: xs.clone(),
                ys: ys.iter().map(|y| y * s).collect(),
                cumulative: cumulative.iter().map(|c| c * s).collect(),
            },
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::PiecewiseLinear { ys, .. } => ys.iter().copied().fold(0.0, f64::max),
        }
    }

    fn knots(&self) -> Vec<f64> {
        match self {
            Self::Constant { .. } => Vec::new(),
            Self::PiecewiseLinear { xs, .. } => xs.clone(),
        }
    }
}

/// Upward and downward local precision of an authentication rate, and the
/// kernel they generate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecisionKernel {
    pub lo: f64,
    pub hi: f64,
    /// Rate at which authentication falls as the true type rises above
    /// the report.
    pub plus: PrecisionFn,
    /// Rate at which authentication falls as the true type drops below the
    /// report.
    pub minus: PrecisionFn,
}

impl PrecisionKernel {
    pub fn new(lo: f64, hi: f64, plus: PrecisionFn, minus: PrecisionFn) -> Result<Self> {
        check_interval(lo, hi)?;
        Ok(Self { lo, hi, plus, minus })
    }

    /// The same constant precision in both directions.
    pub fn constant(lo: f64, hi: f64, lambda: f64) -> Result<Self> {
        let p = PrecisionFn::constant(lambda)?;
        Self::new(lo, hi, p.clone(), p)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { lo: self.lo, hi: self.hi, plus: self.plus.scaled(s), minus: self.minus.scaled(s) }
    }

    /// Kernel value when `ty` reports `report`: `exp(-∫ plus)` over
    /// `[report, ty]` for upward gaps, `exp(-∫ minus)` over `[ty, report]`
    /// otherwise.
    pub fn kernel(&self, report: f64, ty: f64) -> f64 {
        if ty >= report {
            (-self.plus.integral(report, ty)).exp()
        } else {
            (-self.minus.integral(ty, report)).exp()
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.plus.knots();
        b.extend(self.minus.knots());
        b
    }

    fn covers(&self, dist: &TypeDistribution) -> Result<()> {
        if self.lo > dist.lo() + 1e-12 || self.hi < dist.hi() - 1e-12 {
            return Err(Error::InvalidInput("precision kernel does not cover the type interval".into()));
        }
        Ok(())
    }
}

type AlphaFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `alpha(report | type)` on an interval of types.
#[derive(Clone)]
pub enum ContinuousAuthRate {
    /// `exp(-|∫ precision|)` between report and type.
    Exponential { lo: f64, hi: f64, precision: PrecisionFn },
    /// `1 - |report - type|^sigma`, floored at zero.
    PowerKink { lo: f64, hi: f64, sigma: f64 },
    /// Bilinear interpolation of `values[report][type]` on a grid.
    Tabulated { grid: Vec<f64>, values: Vec<Vec<f64>> },
    Custom { lo: f64, hi: f64, f: AlphaFn },
}

impl fmt::Debug for ContinuousAuthRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { lo, hi, precision } => {
                write!(f, "Exponential([{lo}, {hi}], {precision:?})")
            }
            Self::PowerKink { lo, hi, sigma } => write!(f, "PowerKink([{lo}, {hi}], sigma = {sigma})"),
            Self::Tabulated { grid, .. } => write!(f, "Tabulated({} points)", grid.len()),
            Self::Custom { lo, hi, .. } => write!(f, "Custom([{lo}, {hi}])"),
        }
    }
}

impl ContinuousAuthRate {
    pub fn exponential(lo: f64, hi: f64, precision: PrecisionFn) -> Result<Self> {
        check_interval(lo, hi)?;
        Ok(Self::Exponential { lo, hi, precision })
    }

    /// No verification: every report is authenticated.
    pub fn unverified(lo: f64, hi: f64) -> Result<Self> {
        Self::exponential(lo, hi, PrecisionFn::constant(0.0)?)
    }

    pub fn power_kink(lo: f64, hi: f64, sigma: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        if !(sigma > 0.0) {
            return Err(Error::InvalidInput("power must be positive".into()));
        }
        Ok(Self::PowerKink { lo, hi, sigma })
    }

    /// Grid values with the diagonal set to one.
    pub fn tabulated(grid: Vec<f64>, mut values: Vec<Vec<f64>>) -> Result<Self> {
        let n = grid.len();
        check_knots(&grid, &grid)?;
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!("tabulated authentication must be {n} x {n}")));
        }
        if values.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput("authentication rates must lie in [0, 1]".into()));
        }
        for (i, row) in values.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Ok(Self::Tabulated { grid, values })
    }

    pub fn custom(lo: f64, hi: f64, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        check_interval(lo, hi)?;
        Ok(Self::Custom { lo, hi, f: Arc::new(f) })
    }

    pub fn lo(&self) -> f64 {
        match self {
            Self::Exponential { lo, .. } | Self::PowerKink { lo, .. } | Self::Custom { lo, .. } => *lo,
            Self::Tabulated { grid, .. } => grid[0],
        }
    }

    pub fn hi(&self) -> f64 {
        match self {
            Self::Exponential { hi, .. } | Self::PowerKink { hi, .. } | Self::Custom { hi, .. } => *hi,
            Self::Tabulated { grid, .. } => grid[grid.len() - 1],
        }
    }

    /// Probability that `ty` is authenticated as `report`.
    pub fn alpha(&self, report: f64, ty: f64) -> f64 {
        match self {
            Self::Exponential { precision, .. } => {
                let (a, b) = if report <= ty { (report, ty) } else { (ty, report) };
                (-precision.integral(a, b)).exp()
            }
            Self::PowerKink { sigma, .. } => (1.0 - (report - ty).abs().powf(*sigma)).max(0.0),
            Self::Tabulated { grid, values } => {
                let cell = |x: f64| {
                    let i = (grid.partition_point(|&g| g <= x).max(1) - 1).min(grid.len() - 2);
                    let w = ((x - grid[i]) / (grid[i + 1] - grid[i])).clamp(0.0, 1.0);
                    (i, w)
                };
                let (i, u) = cell(report);
                let (j, v) = cell(ty);
                let at = |a: usize, b: usize| values[a][b];
                (1.0 - u) * ((1.0 - v) * at(i, j) + v * at(i, j + 1))
                    + u * ((1.0 - v) * at(i + 1, j) + v * at(i + 1, j + 1))
            }
            Self::Custom { f, .. } => f(report, ty),
        }
    }

    /// Precision in closed form, where the preset provides it.
    fn analytic_precision(&self) -> Result<Option<(PrecisionFn, PrecisionFn)>> {
        Ok(match self {
            Self::Exponential { precision, .. } => Some((precision.clone(), precision.clone())),
            Self::Tabulated { grid, values } => {
                let n = grid.len();
                let plus = (0..n)
                    .map(|i| {
                        let k = if i + 1 < n { i } else { i - 1 };
                        (1.0 - values[k][k + 1]) / (grid[k + 1] - grid[k])
                    })
                    .collect();
                let minus = (0..n)
                    .map(|i| {
                        let k = if i > 0 { i } else { 1 };
                        (1.0 - values[k][k - 1]) / (grid[k] - grid[k - 1])
                    })
                    .collect();
                Some((
                    PrecisionFn::piecewise_linear(grid.clone(), plus)?,
                    PrecisionFn::piecewise_linear(grid.clone(), minus)?,
                ))
            }
            _ => None,
        })
    }
}

/// Upward and downward precision of an authentication rate: how fast
/// authentication decays as the true type moves away from the report.
///
/// Presets with closed forms use them; otherwise one-sided finite
/// differences with Richardson refinement are tabulated on a fine grid.
pub fn precision_from_alpha(a: &ContinuousAuthRate) -> Result<PrecisionKernel> {
    let (lo, hi) = (a.lo(), a.hi());
    if let Some((plus, minus)) = a.analytic_precision()? {
        return PrecisionKernel::new(lo, hi, plus, minus);
    }
    if lo == hi {
        return PrecisionKernel::constant(lo, hi, 0.0);
    }
    let xs = linspace(lo, hi, PRECISION_SAMPLES);
    let h = FD_STEP.min(0.25 * (xs[1] - xs[0]));
    let sample = |x: f64, right: bool| -> Result<f64> {
        let d = one_sided_derivative(|t| a.alpha(x, t), x, h, right);
        let v = if right { -d } else { d };
        if v < -NEGATIVE_PRECISION_TOL {
            return Err(Error::NegativePrecision { theta: x, value: v });
        }
        Ok(v.max(0.0))
    };
    let n = xs.len();
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for (i, &x) in xs.iter().enumerate() {
        plus.push(if i + 1 < n { sample(x, true)? } else { f64::NAN });
        minus.push(if i > 0 { sample(x, false)? } else { f64::NAN });
    }
    plus[n - 1] = plus[n - 2];
    minus[0] = minus[1];
    PrecisionKernel::new(
        lo,
        hi,
        PrecisionFn::piecewise_linear(xs.clone(), plus)?,
        PrecisionFn::piecewise_linear(xs, minus)?,
    )
}

/// `theta - (1 - F(theta)) / f(theta)`.
pub fn myerson_virtual_value(dist: &TypeDistribution, theta: f64) -> Result<f64> {
    let f = dist.pdf(theta);
    if !(f > 0.0) {
        return Err(Error::InvalidInput(format!("density vanishes at {theta}")));
    }
    Ok(theta - (1.0 - dist.cdf(theta)) / f)
}

/// Virtual value with verification: the information rent term weights each
/// higher type by the kernel at which it could mimic `theta`.
pub fn virtual_value(dist: &TypeDistribution, kernel: &PrecisionKernel, theta: f64) -> Result<f64> {
    kernel.covers(dist)?;
    let hi = dist.hi();
    if theta >= hi {
        return Ok(theta);
    }
    if kernel.plus.max_value() == 0.0 {
        return myerson_virtual_value(dist, theta);
    }
    let f = dist.pdf(theta);
    if !(f > 0.0) {
        return Err(Error::InvalidInput(format!("density vanishes at {theta}")));
    }
    let mut breaks = dist.breakpoints();
    breaks.extend(kernel.breakpoints());
    let rent = integrate_split(|z| kernel.kernel(theta, z) * dist.pdf(z), theta, hi, &breaks, QUAD_TOL)?;
    Ok(theta - rent / f)
}

/// Virtual values on an evenly spaced grid of `n` types.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VirtualValueTable {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_myerson: Vec<f64>,
}

pub fn virtual_value_table(dist: &TypeDistribution, kernel: &PrecisionKernel, n: usize) -> Result<VirtualValueTable> {
    let theta = linspace(dist.lo(), dist.hi(), n);
    if dist.is_degenerate() {
        return Ok(VirtualValueTable { phi: theta.clone(), phi_myerson: theta.clone(), theta });
    }
    let phi = theta.par_iter().map(|&t| virtual_value(dist, kernel, t)).collect::<Result<Vec<_>>>()?;
    let phi_myerson = theta.iter().map(|&t| myerson_virtual_value(dist, t)).collect::<Result<Vec<_>>>()?;
    Ok(VirtualValueTable { theta, phi, phi_myerson })
}

/// Equilibrium utilities on `grid` from the envelope formula
/// `U(theta) = ∫_lo^theta kernel(z | theta) q(z) dz`, with `U(grid[0]) = 0`.
///
/// Uses `kernel(z | b) = kernel(z | a) kernel(a | b)` for `z <= a <= b` to
/// build the integral one cell at a time.
pub fn utility_envelope<Q: Fn(f64) -> f64 + Sync>(
    kernel: &PrecisionKernel,
    grid: &[f64],
    q: Q,
    breaks: &[f64],
) -> Result<Vec<f64>> {
    let mut u = vec![0.0; grid.len()];
    let mut all_breaks = breaks.to_vec();
    all_breaks.extend(kernel.breakpoints());
    for i in 1..grid.len() {
        let (a, b) = (grid[i - 1], grid[i]);
        let cell = integrate_split(|z| kernel.kernel(z, b) * q(z), a, b, &all_breaks, QUAD_TOL)?;
        u[i] = kernel.kernel(a, b) * u[i - 1] + cell;
    }
    Ok(u)
}

/// Outcome of checking the kernel bounds on an authentication rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub grid_n: usize,
    /// Largest excess of the kernel over the authentication rate.
    pub lower_bound_violation: f64,
    /// Largest excess of the authentication rate over the global upper
    /// bound for the given allocation, when one was supplied.
    pub upper_bound_violation: Option<f64>,
    /// Largest failure of `myerson <= phi <= theta` on the grid.
    pub virtual_value_order_violation: f64,
    pub max_precision: f64,
    /// Precision is finite on the grid. Integrability is only checked
    /// through this.
    pub precision_bounded: bool,
}

/// Checks `alpha >= kernel` on a grid, the ordering of virtual values, and,
/// given an allocation `q`, the global upper bound on `alpha` below the
/// diagonal.
pub fn check_bounds(
    dist: &TypeDistribution,
    alpha: &ContinuousAuthRate,
    kernel: &PrecisionKernel,
    q: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    grid_n: usize,
) -> Result<BoundsReport> {
    let grid = linspace(dist.lo(), dist.hi(), grid_n);
    let lower = grid
        .par_iter()
        .map(|&t| grid.iter().map(|&r| kernel.kernel(r, t) - alpha.alpha(r, t)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    let table = virtual_value_table(dist, kernel, grid_n)?;
    let order = table
        .theta
        .iter()
        .zip(&table.phi)
        .zip(&table.phi_myerson)
        .map(|((t, p), m)| (m - p).max(p - t))
        .fold(0.0, f64::max);
    let upper = match q {
        None => None,
        Some(q) => Some(upper_bound_violation(dist, alpha, kernel, q, &grid)?),
    };
    let max_precision = kernel.plus.max_value().max(kernel.minus.max_value());
    Ok(BoundsReport {
        grid_n,
        lower_bound_violation: lower.max(0.0),
        upper_bound_violation: upper,
        virtual_value_order_violation: order.max(0.0),
        max_precision,
        precision_bounded: max_precision.is_finite(),
    })
}

fn upper_bound_violation(
    dist: &TypeDistribution,
    alpha: &ContinuousAuthRate,
    kernel: &PrecisionKernel,
    q: &(dyn Fn(f64) -> f64 + Sync),
    grid: &[f64],
) -> Result<f64> {
    let hi = dist.hi();
    let weight = |z: f64| kernel.kernel(z, hi) * q(z);
    // cumulative[i] = ∫_lo^grid[i] kernel(z | hi) q(z) dz
    let mut cumulative = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        cumulative[i] = cumulative[i - 1] + integrate_split(weight, grid[i - 1], grid[i], &[], QUAD_TOL)?;
    }
    let worst = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut w: f64 = 0.0;
            for j in 0..i {
                let (r, t) = (grid[j], grid[i]);
                let denom = cumulative[j] + (t - r) * weight(r);
                if denom <= 1e-300 {
                    continue;
                }
                let bound = kernel.kernel(r, t) * cumulative[i] / denom;
                w = w.max(alpha.alpha(r, t) - bound);
            }
            w
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst.max(0.0))
}

/// Distance of the virtual value from its two limits as precision scales.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitRow {
    pub scale: f64,
    pub gap_to_myerson: f64,
    pub gap_to_type: f64,
}

/// Scales the precision by each factor and records the largest distance of
/// the virtual value from the classical one and from the type itself.
/// `monotone` reports whether the first grows and the second shrinks with
/// the scale.
pub fn precision_limit_check(
    dist: &TypeDistribution,
    kernel: &PrecisionKernel,
    scales: &[f64],
    grid_n: usize,
) -> Result<(Vec<LimitRow>, bool)> {
    let mut rows = Vec::with_capacity(scales.len());
    for &s in scales {
        let t = virtual_value_table(dist, &kernel.scaled(s), grid_n)?;
        let mut gm: f64 = 0.0;
        let mut gt: f64 = 0.0;
        for ((x, p), m) in t.theta.iter().zip(&t.phi).zip(&t.phi_myerson) {
            gm = gm.max((p - m).abs());
            gt = gt.max((x - p).abs());
        }
        rows.push(LimitRow { scale: s, gap_to_myerson: gm, gap_to_type: gt });
    }
    let mut order: Vec<&LimitRow> = rows.iter().collect();
    order.sort_by(|a, b| a.scale.total_cmp(&b.scale));
    let monotone = order.windows(2).all(|w| {
        w[1].gap_to_myerson >= w[0].gap_to_myerson - 1e-9 && w[1].gap_to_type <= w[0].gap_to_type + 1e-9
    });
    Ok((rows, monotone))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> TypeDistribution {
        TypeDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_closed_forms() {
        let d = unit();
        for &lambda in &[0.0, 1.0, 2.0, 3.0] {
            let k = PrecisionKernel::constant(0.0, 1.0, lambda).unwrap();
            for i in 0..=20 {
                let t = i as f64 / 20.0;
                let expected = if lambda == 0.0 {
                    2.0 * t - 1.0
                } else {
                    t - (1.0 - (lambda * (t - 1.0)).exp()) / lambda
                };
                assert!((virtual_value(&d, &k, t).unwrap() - expected).abs() < 1e-8, "{lambda} {t}");
            }
        }
        let k = PrecisionKernel::constant(0.0, 1.0, 1.0).unwrap();
        assert_eq!(virtual_value(&d, &k, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn myerson_for_uniform() {
        assert!((myerson_virtual_value(&unit(), 0.25).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn distributions_integrate_to_one() {
        let e = TypeDistribution::truncated_exponential(0.0, 2.0, 1.5).unwrap();
        let t = TypeDistribution::tabulated(vec![0.0, 0.5, 1.0], vec![1.0, 3.0, 1.0]).unwrap();
        for d in [e, t] {
            let mass = integrate_split(|x| d.pdf(x), d.lo(), d.hi(), &d.breakpoints(), 1e-12).unwrap();
            assert!((mass - 1.0).abs() < 1e-10);
            let x = 0.3 * d.hi();
            let partial = integrate_split(|z| d.pdf(z), d.lo(), x, &d.breakpoints(), 1e-12).unwrap();
            assert!((partial - d.cdf(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn precision_of_presets() {
        let a = ContinuousAuthRate::exponential(0.0, 1.0, PrecisionFn::constant(2.0).unwrap()).unwrap();
        let k = precision_from_alpha(&a).unwrap();
        assert_eq!(k.plus.value(0.3), 2.0);
        assert_eq!(k.minus.value(0.7), 2.0);

        let kink = ContinuousAuthRate::power_kink(0.0, 1.0, 1.0).unwrap();
        let k = precision_from_alpha(&kink).unwrap();
        assert!((k.plus.value(0.5) - 1.0).abs() < 1e-6);
        assert!((k.minus.value(0.5) - 1.0).abs() < 1e-6);

        let smooth = ContinuousAuthRate::power_kink(0.0, 1.0, 2.0).unwrap();
        let k = precision_from_alpha(&smooth).unwrap();
        assert!(k.plus.max_value() < 1e-6 && k.minus.max_value() < 1e-6);
    }

    #[test]
    fn increasing_away_from_the_diagonal_is_rejected() {
        let bad = ContinuousAuthRate::custom(0.0, 1.0, |r, t| (0.5 + (r - t).abs()).min(1.0)).unwrap();
        assert!(matches!(precision_from_alpha(&bad), Err(Error::NegativePrecision { .. })));
    }

    #[test]
    fn tabulated_alpha_forces_the_diagonal() {
        let g = vec![0.0, 0.5, 1.0];
        let a = ContinuousAuthRate::tabulated(g, vec![vec![0.9, 0.6, 0.2]; 3]).unwrap();
        for x in [0.0, 0.5, 1.0] {
            assert_eq!(a.alpha(x, x), 1.0);
        }
        assert!(ContinuousAuthRate::tabulated(vec![0.0, 1.0], vec![vec![1.0, 1.2]; 2]).is_err());
    }

    #[test]
    fn envelope_with_unit_allocation() {
        let k = PrecisionKernel::constant(0.0, 1.0, 1.0).unwrap();
        let grid = linspace(0.0, 1.0, 11);
        let u = utility_envelope(&k, &grid, |_| 1.0, &[]).unwrap();
        for (t, v) in grid.iter().zip(&u) {
            assert!((v - (1.0 - (-t).exp())).abs() < 1e-9);
        }
    }

    #[test]
    fn exponential_rates_meet_both_bounds() {
        let d = unit();
        let a = ContinuousAuthRate::exponential(0.0, 1.0, PrecisionFn::constant(1.5).unwrap()).unwrap();
        let k = precision_from_alpha(&a).unwrap();
        let q = |t: f64| (2.0 * t - 1.0).max(0.0);
        let r = check_bounds(&d, &a, &k, Some(&q), 41).unwrap();
        assert!(r.lower_bound_violation < 1e-12);
        assert!(r.upper_bound_violation.unwrap() < 1e-9);
        assert!(r.virtual_value_order_violation < 1e-9);
    }

    #[test]
    fn limits_in_the_scale() {
        let k = PrecisionKernel::constant(0.0, 1.0, 1.0).unwrap();
        let (rows, monotone) = precision_limit_check(&unit(), &k, &[0.01, 1.0, 100.0, 1e6], 51).unwrap();
        assert!(monotone);
        assert!(rows[0].gap_to_myerson < 0.01);
        assert!(rows[3].gap_to_type < 1e-5);
    }
}
