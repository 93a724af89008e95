//! Python bindings for `veritest-core`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pythonize::pythonize;
use serde::Serialize;

use veritest_core::authentication as auth;
use veritest_core::continuous as cont;
use veritest_core::discernment as disc;
use veritest_core::harness;
use veritest_core::markov;
use veritest_core::mechanisms as mech;

create_exception!(veritest, VeritestError, PyValueError, "Raised for invalid inputs and failed computations.");

fn err(e: veritest_core::Error) -> PyErr {
    VeritestError::new_err(e.to_string())
}

trait OrPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> OrPy<T> for veritest_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    Ok(pythonize(py, value)?)
}

fn score_set(scores: Option<Vec<f64>>, n: usize) -> PyResult<markov::ScoreSet> {
    match scores {
        Some(s) => markov::ScoreSet::new(s).py_err(),
        None => markov::ScoreSet::range(n).py_err(),
    }
}

/// A probability distribution over an ordered set of scores.
#[pyclass(module = "veritest", name = "Measure", frozen)]
struct PyMeasure(markov::Measure);

#[pymethods]
impl PyMeasure {
    /// Scores default to `0, 1, ..., len(weights) - 1`.
    #[new]
    #[pyo3(signature = (weights, scores = None))]
    fn new(weights: Vec<f64>, scores: Option<Vec<f64>>) -> PyResult<Self> {
        let s = score_set(scores, weights.len())?;
        Ok(Self(markov::Measure::new(s, weights).py_err()?))
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    #[getter]
    fn scores(&self) -> Vec<f64> {
        self.0.scores().values().to_vec()
    }

    fn cdf(&self) -> Vec<f64> {
        self.0.cdf()
    }

    /// First-order stochastic dominance of `self` over `other`.
    fn fosd_geq(&self, other: &PyMeasure) -> PyResult<bool> {
        self.0.fosd_geq(&other.0).py_err()
    }

    fn push(&self, k: &PyTransition) -> PyResult<PyMeasure> {
        Ok(PyMeasure(self.0.push(&k.0).py_err()?))
    }

    fn __repr__(&self) -> String {
        format!("Measure(weights={:?}, scores={:?})", self.0.weights(), self.0.scores().values())
    }
}

/// A Markov kernel between score sets, one row per source score.
#[pyclass(module = "veritest", name = "Transition", frozen)]
struct PyTransition(markov::Transition);

#[pymethods]
impl PyTransition {
    #[new]
    #[pyo3(signature = (rows, source = None, target = None))]
    fn new(rows: Vec<Vec<f64>>, source: Option<Vec<f64>>, target: Option<Vec<f64>>) -> PyResult<Self> {
        let source = score_set(source, rows.len())?;
        let target = score_set(target, rows.first().map_or(0, Vec::len))?;
        Ok(Self(markov::Transition::new(source, target, rows).py_err()?))
    }

    #[staticmethod]
    #[pyo3(signature = (n = None, scores = None))]
    fn identity(n: Option<usize>, scores: Option<Vec<f64>>) -> PyResult<Self> {
        let n = n.or(scores.as_ref().map(Vec::len)).unwrap_or(0);
        Ok(Self(markov::Transition::identity(score_set(scores, n)?)))
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows()
    }

    fn prob(&self, i: usize, j: usize) -> f64 {
        self.0.prob(i, j)
    }

    /// Apply `self`, then `other`.
    fn compose(&self, other: &PyTransition) -> PyResult<PyTransition> {
        Ok(PyTransition(self.0.compose(&other.0).py_err()?))
    }

    fn mix(&self, other: &PyTransition, weight: f64) -> PyResult<PyTransition> {
        Ok(PyTransition(self.0.mix(&other.0, weight).py_err()?))
    }

    fn is_monotone(&self) -> bool {
        self.0.is_monotone()
    }

    fn is_downward(&self) -> bool {
        self.0.is_downward()
    }

    fn __repr__(&self) -> String {
        format!("Transition(rows={:?})", self.0.rows())
    }
}

/// Distribution-quantile conversion carrying `source` onto `target`.
#[pyfunction]
fn fq_compose(source: &PyMeasure, target: &PyMeasure) -> PyResult<PyTransition> {
    Ok(PyTransition(markov::fq_compose(&source.0, &target.0).py_err()?))
}

/// Outcome of a discernment check.
#[pyclass(module = "veritest", name = "Witness", frozen, get_all)]
struct PyWitness {
    holds: bool,
    lambda_interval: Option<(f64, f64)>,
    conversion: Option<Py<PyTransition>>,
    degenerate: bool,
    blocking_type: Option<String>,
}

#[pymethods]
impl PyWitness {
    fn __bool__(&self) -> bool {
        self.holds
    }

    fn __repr__(&self) -> String {
        format!(
            "Witness(holds={}, lambda_interval={:?}, blocking_type={:?})",
            self.holds, self.lambda_interval, self.blocking_type
        )
    }
}

/// Score distributions of every type on every test.
#[pyclass(module = "veritest", name = "PassageMatrix", frozen)]
struct PyPassageMatrix(disc::PassageMatrix);

impl PyPassageMatrix {
    fn triple(&self, theta: &str, tau: &str, psi: &str) -> PyResult<(usize, usize, usize)> {
        let e = &self.0;
        Ok((e.type_index(theta).py_err()?, e.test_index(tau).py_err()?, e.test_index(psi).py_err()?))
    }

    fn test_labels(&self, idx: &[usize]) -> Vec<String> {
        idx.iter().map(|&k| self.0.tests()[k].clone()).collect()
    }
}

#[pymethods]
impl PyPassageMatrix {
    /// `dists[test][type]` lists the score weights of that type on that test.
    #[new]
    #[pyo3(signature = (types, tests, dists, scores = None))]
    fn new(types: Vec<String>, tests: Vec<String>, dists: Vec<Vec<Vec<f64>>>, scores: Option<Vec<f64>>) -> PyResult<Self> {
        let n = dists.first().and_then(|r| r.first()).map_or(0, Vec::len);
        let s = score_set(scores, n)?;
        let dists = dists
            .into_iter()
            .map(|row| row.into_iter().map(|w| markov::Measure::new(s.clone(), w)).collect())
            .collect::<veritest_core::Result<Vec<Vec<_>>>>()
            .py_err()?;
        Ok(Self(disc::PassageMatrix::new(types, tests, dists).py_err()?))
    }

    /// Pass/fail tests; `rates[test][type]` is a pass probability.
    #[staticmethod]
    fn binary(types: Vec<String>, tests: Vec<String>, rates: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self(disc::PassageMatrix::binary(types, tests, rates).py_err()?))
    }

    #[getter]
    fn types(&self) -> Vec<String> {
        self.0.types().to_vec()
    }

    #[getter]
    fn tests(&self) -> Vec<String> {
        self.0.tests().to_vec()
    }

    #[getter]
    fn scores(&self) -> Vec<f64> {
        self.0.scores().values().to_vec()
    }

    fn pass_rate(&self, test: &str, ty: &str) -> PyResult<f64> {
        Ok(self.0.pass_rate(self.0.test_index(test).py_err()?, self.0.type_index(ty).py_err()?))
    }

    /// Is `tau` at least as discerning as `psi` at type `theta`?
    fn check_discerning(&self, py: Python<'_>, theta: &str, tau: &str, psi: &str) -> PyResult<PyWitness> {
        let (th, a, b) = self.triple(theta, tau, psi)?;
        let w = disc::check_discerning(&self.0, th, a, b).py_err()?;
        Ok(PyWitness {
            holds: w.holds,
            lambda_interval: w.lambda_interval,
            conversion: w.conversion.map(|k| Py::new(py, PyTransition(k))).transpose()?,
            degenerate: w.degenerate,
            blocking_type: w.blocking_type.map(|t| self.0.types()[t].clone()),
        })
    }

    /// One of `strictly_more`, `equivalent`, `strictly_less`, `incomparable`.
    fn compare(&self, py: Python<'_>, theta: &str, tau: &str, psi: &str) -> PyResult<Py<PyAny>> {
        let (th, a, b) = self.triple(theta, tau, psi)?;
        Ok(to_py(py, &disc::compare(&self.0, th, a, b).py_err()?)?.unbind())
    }

    /// `table[type][tau][psi]` is true when `tau` is at least as discerning.
    fn relation_table(&self) -> PyResult<Vec<Vec<Vec<bool>>>> {
        disc::relation_table(&self.0).py_err()
    }

    fn most_discerning_tests(&self, theta: &str) -> PyResult<Vec<String>> {
        let th = self.0.type_index(theta).py_err()?;
        Ok(self.test_labels(&disc::most_discerning_tests(&self.0, th).py_err()?))
    }

    /// A test per type that is most discerning at that type, if one exists.
    fn most_discerning_function(&self) -> PyResult<Option<Vec<String>>> {
        Ok(disc::most_discerning_function(&self.0).py_err()?.map(|f| self.test_labels(&f)))
    }

    /// Authentication rates induced by assigning a test to each reported type.
    fn induce_alpha(&self, assignment: Vec<String>) -> PyResult<PyFiniteAuthRate> {
        let idx = assignment.iter().map(|l| self.0.test_index(l)).collect::<veritest_core::Result<Vec<_>>>().py_err()?;
        Ok(PyFiniteAuthRate(auth::induce_alpha(&self.0, &idx).py_err()?))
    }

    fn __repr__(&self) -> String {
        format!("PassageMatrix(types={:?}, tests={:?})", self.0.types(), self.0.tests())
    }
}

/// `alpha[report][type]` on a finite set of types.
#[pyclass(module = "veritest", name = "FiniteAuthRate", frozen)]
struct PyFiniteAuthRate(auth::FiniteAuthRate);

#[pymethods]
impl PyFiniteAuthRate {
    #[new]
    fn new(types: Vec<String>, alpha: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self(auth::FiniteAuthRate::new(types, alpha).py_err()?))
    }

    #[getter]
    fn types(&self) -> Vec<String> {
        self.0.types().to_vec()
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        self.0.matrix().to_vec()
    }

    /// Whether some most-discerning environment induces these rates. The
    /// certificate, when present, names a violating triple of types.
    fn check_most_discerning<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let check = auth::check_most_discerning_alpha(&self.0);
        let labels = self.0.types();
        let out = serde_json::json!({
            "most_discerning": check.most_discerning,
            "product_form": check.product_form,
            "certificate": check.certificate.map(|c| serde_json::json!({
                "theta1": labels[c.theta1],
                "theta2": labels[c.theta2],
                "theta3": labels[c.theta3],
                "slack": c.slack,
            })),
        });
        to_py(py, &out)
    }

    /// A binary environment inducing these rates, with its assignment.
    fn environment(&self) -> PyResult<(PyPassageMatrix, Vec<String>)> {
        let (env, assignment) = auth::environment_from_alpha(&self.0).py_err()?;
        let labels = assignment.iter().map(|&k| env.tests()[k].clone()).collect();
        Ok((PyPassageMatrix(env), labels))
    }
}

/// Distribution of a one-dimensional type on an interval.
#[pyclass(module = "veritest", name = "TypeDistribution", frozen)]
struct PyTypeDistribution(cont::TypeDistribution);

#[pymethods]
impl PyTypeDistribution {
    #[staticmethod]
    fn uniform(lo: f64, hi: f64) -> PyResult<Self> {
        Ok(Self(cont::TypeDistribution::uniform(lo, hi).py_err()?))
    }

    #[staticmethod]
    fn truncated_exponential(lo: f64, hi: f64, rate: f64) -> PyResult<Self> {
        Ok(Self(cont::TypeDistribution::truncated_exponential(lo, hi, rate).py_err()?))
    }

    /// Piecewise-linear density through `(points, density)`, normalized.
    #[staticmethod]
    fn tabulated(points: Vec<f64>, density: Vec<f64>) -> PyResult<Self> {
        Ok(Self(cont::TypeDistribution::tabulated(points, density).py_err()?))
    }

    #[getter]
    fn lo(&self) -> f64 {
        self.0.lo()
    }

    #[getter]
    fn hi(&self) -> f64 {
        self.0.hi()
    }

    fn pdf(&self, x: f64) -> f64 {
        self.0.pdf(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }
}

/// A precision is either a constant or `(xs, ys)` knots of a piecewise-linear function.
#[derive(FromPyObject)]
enum PrecisionArg {
    Constant(f64),
    Knots(Vec<f64>, Vec<f64>),
}

impl PrecisionArg {
    fn build(self) -> PyResult<cont::PrecisionFn> {
        match self {
            PrecisionArg::Constant(v) => cont::PrecisionFn::constant(v).py_err(),
            PrecisionArg::Knots(xs, ys) => cont::PrecisionFn::piecewise_linear(xs, ys).py_err(),
        }
    }
}

/// Upward and downward precision of verification on an interval of types.
#[pyclass(module = "veritest", name = "PrecisionKernel", frozen)]
struct PyPrecisionKernel(cont::PrecisionKernel);

#[pymethods]
impl PyPrecisionKernel {
    #[new]
    fn new(lo: f64, hi: f64, plus: PrecisionArg, minus: PrecisionArg) -> PyResult<Self> {
        Ok(Self(cont::PrecisionKernel::new(lo, hi, plus.build()?, minus.build()?).py_err()?))
    }

    #[staticmethod]
    fn constant(lo: f64, hi: f64, precision: f64) -> PyResult<Self> {
        Ok(Self(cont::PrecisionKernel::constant(lo, hi, precision).py_err()?))
    }

    /// Precision recovered from a continuous authentication rate.
    #[staticmethod]
    fn from_alpha(alpha: &PyAuthRate) -> PyResult<Self> {
        Ok(Self(cont::precision_from_alpha(&alpha.0).py_err()?))
    }

    fn kernel(&self, report: f64, ty: f64) -> f64 {
        self.0.kernel(report, ty)
    }

    fn plus(&self, x: f64) -> f64 {
        self.0.plus.value(x)
    }

    fn minus(&self, x: f64) -> f64 {
        self.0.minus.value(x)
    }
}

/// `alpha(report | type)` on an interval of types.
#[pyclass(module = "veritest", name = "AuthRate", frozen)]
struct PyAuthRate(cont::ContinuousAuthRate);

#[pymethods]
impl PyAuthRate {
    #[staticmethod]
    fn exponential(lo: f64, hi: f64, precision: PrecisionArg) -> PyResult<Self> {
        Ok(Self(cont::ContinuousAuthRate::exponential(lo, hi, precision.build()?).py_err()?))
    }

    #[staticmethod]
    fn unverified(lo: f64, hi: f64) -> PyResult<Self> {
        Ok(Self(cont::ContinuousAuthRate::unverified(lo, hi).py_err()?))
    }

    #[staticmethod]
    fn power_kink(lo: f64, hi: f64, sigma: f64) -> PyResult<Self> {
        Ok(Self(cont::ContinuousAuthRate::power_kink(lo, hi, sigma).py_err()?))
    }

    /// Bilinear interpolation of `values[report][type]` on `grid`.
    #[staticmethod]
    fn tabulated(grid: Vec<f64>, values: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self(cont::ContinuousAuthRate::tabulated(grid, values).py_err()?))
    }

    fn alpha(&self, report: f64, ty: f64) -> f64 {
        self.0.alpha(report, ty)
    }

    fn __call__(&self, report: f64, ty: f64) -> f64 {
        self.0.alpha(report, ty)
    }
}

#[pyfunction]
fn myerson_virtual_value(dist: &PyTypeDistribution, theta: f64) -> PyResult<f64> {
    cont::myerson_virtual_value(&dist.0, theta).py_err()
}

#[pyfunction]
fn virtual_value(dist: &PyTypeDistribution, kernel: &PyPrecisionKernel, theta: f64) -> PyResult<f64> {
    cont::virtual_value(&dist.0, &kernel.0, theta).py_err()
}

/// Dict of `theta`, `phi` and `phi_myerson` lists on an even grid.
#[pyfunction]
#[pyo3(signature = (dist, kernel, n = 101))]
fn virtual_value_table<'py>(
    py: Python<'py>,
    dist: &PyTypeDistribution,
    kernel: &PyPrecisionKernel,
    n: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &cont::virtual_value_table(&dist.0, &kernel.0, n).py_err()?)
}

/// Production cost of quality.
#[pyclass(module = "veritest", name = "Cost", frozen)]
struct PyCost(mech::CostFunction);

#[pymethods]
impl PyCost {
    /// `coef * q^2 / 2`.
    #[staticmethod]
    #[pyo3(signature = (coef = 1.0))]
    fn quadratic(coef: f64) -> PyResult<Self> {
        Ok(Self(mech::CostFunction::quadratic(coef).py_err()?))
    }

    /// `coef * q^exponent / exponent`.
    #[staticmethod]
    fn power(coef: f64, exponent: f64) -> PyResult<Self> {
        Ok(Self(mech::CostFunction::power(coef, exponent).py_err()?))
    }

    fn __call__(&self, q: f64) -> f64 {
        self.0.cost(q)
    }
}

/// Either kind of authentication rate, for the incentive checks.
#[derive(FromPyObject)]
enum AuthArg<'py> {
    Continuous(PyRef<'py, PyAuthRate>),
    Finite(PyRef<'py, PyFiniteAuthRate>),
}

impl AuthArg<'_> {
    fn source(&self) -> harness::AuthSource<'_> {
        match self {
            AuthArg::Continuous(a) => harness::AuthSource::Continuous(&a.0),
            AuthArg::Finite(a) => harness::AuthSource::Finite(&a.0),
        }
    }
}

/// A direct mechanism tabulated on a grid of types.
#[pyclass(module = "veritest", name = "Mechanism")]
struct PyMechanism(mech::SolvedMechanism);

#[pymethods]
impl PyMechanism {
    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.0.theta.clone()
    }

    #[getter]
    fn q(&self) -> Vec<f64> {
        self.0.q.clone()
    }

    #[getter]
    fn t(&self) -> Vec<f64> {
        self.0.t.clone()
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.0.u.clone()
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.0.phi.clone()
    }

    #[getter]
    fn phi_myerson(&self) -> Vec<f64> {
        self.0.phi_myerson.clone()
    }

    #[getter]
    fn revenue(&self) -> f64 {
        self.0.revenue
    }

    #[getter]
    fn virtual_surplus(&self) -> f64 {
        self.0.virtual_surplus
    }

    /// Lowest type served.
    #[getter]
    fn threshold(&self) -> Option<f64> {
        self.0.threshold
    }

    #[getter]
    fn flags<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.flags)
    }

    fn q_at(&self, x: f64) -> f64 {
        self.0.q_at(x)
    }

    /// Largest violation of the global upper bound on `alpha`; also recorded in the flags.
    #[pyo3(signature = (dist, alpha, kernel, tol = veritest_core::IC_TOL))]
    fn verify_upper_bound(&mut self, dist: &PyTypeDistribution, alpha: &PyAuthRate, kernel: &PyPrecisionKernel, tol: f64) -> PyResult<f64> {
        self.0.verify_upper_bound(&dist.0, &alpha.0, &kernel.0, tol).py_err()
    }

    /// Exhaustive incentive check over every pair of grid types.
    #[pyo3(signature = (alpha, tol = veritest_core::IC_TOL))]
    fn check_ic<'py>(&self, py: Python<'py>, alpha: AuthArg<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &harness::check_mechanism_ic(&self.0, alpha.source(), tol).py_err()?)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }
}

#[pyfunction]
#[pyo3(signature = (dist, kernel, cost = None, grid = 201))]
fn solve_pricing(dist: &PyTypeDistribution, kernel: &PyPrecisionKernel, cost: Option<&PyCost>, grid: usize) -> PyResult<PyMechanism> {
    let cost = match cost {
        Some(c) => c.0.clone(),
        None => mech::CostFunction::quadratic(1.0).py_err()?,
    };
    Ok(PyMechanism(mech::solve_nonlinear_pricing(&dist.0, &kernel.0, &cost, grid).py_err()?))
}

#[pyfunction]
#[pyo3(signature = (dist, kernel, grid = 201))]
fn solve_sale(dist: &PyTypeDistribution, kernel: &PyPrecisionKernel, grid: usize) -> PyResult<PyMechanism> {
    Ok(PyMechanism(mech::solve_single_good(&dist.0, &kernel.0, grid).py_err()?))
}

/// Exhaustive incentive check of a tabulated mechanism `(q, t)` on `theta`.
#[pyfunction]
#[pyo3(signature = (theta, q, t, alpha, tol = veritest_core::IC_TOL))]
fn check_ic<'py>(py: Python<'py>, theta: Vec<f64>, q: Vec<f64>, t: Vec<f64>, alpha: AuthArg<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &harness::check_ic(&theta, &q, &t, alpha.source(), tol).py_err()?)
}

/// Optimal auction for several independently distributed bidders.
#[pyclass(module = "veritest", name = "Auction", frozen)]
struct PyAuction(mech::AuctionSolution);

#[pymethods]
impl PyAuction {
    #[getter]
    fn revenue(&self) -> f64 {
        self.0.revenue
    }

    #[getter]
    fn reserves(&self) -> Vec<Option<f64>> {
        self.0.bidders.iter().map(|b| b.reserve).collect()
    }

    /// Index of the winning bidder at a type profile, if anyone wins.
    fn winner(&self, types: Vec<f64>) -> Option<usize> {
        self.0.winner(&types)
    }

    fn transfers(&self, types: Vec<f64>) -> Vec<f64> {
        self.0.transfers(&types)
    }

    /// Interim incentive checks per bidder and ex post participation.
    #[pyo3(signature = (alphas, tol = veritest_core::IC_TOL))]
    fn check_ic<'py>(&self, py: Python<'py>, alphas: Vec<PyRef<'py, PyAuthRate>>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let rates: Vec<_> = alphas.iter().map(|a| a.0.clone()).collect();
        to_py(py, &harness::check_auction_ic(&self.0, &rates, tol).py_err()?)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }
}

/// `bidders` is a list of `(TypeDistribution, PrecisionKernel)` pairs.
#[pyfunction]
#[pyo3(signature = (bidders, grid = 201))]
fn solve_auction(bidders: Vec<(PyRef<'_, PyTypeDistribution>, PyRef<'_, PyPrecisionKernel>)>, grid: usize) -> PyResult<PyAuction> {
    let bidders: Vec<_> = bidders.iter().map(|(d, k)| mech::Bidder { dist: d.0.clone(), kernel: k.0.clone() }).collect();
    Ok(PyAuction(mech::solve_auction(&bidders, grid).py_err()?))
}

/// A finite mechanism with messages, randomized tests and decisions.
#[pyclass(module = "veritest", name = "Profile", frozen)]
struct PyProfile(harness::FiniteProfile);

#[pymethods]
impl PyProfile {
    /// A random profile in which every type best-responds.
    #[staticmethod]
    #[pyo3(signature = (seed = 0, types = 3, messages = 3, tests = 3, decisions = 2))]
    fn random(seed: u64, types: usize, messages: usize, tests: usize, decisions: usize) -> PyResult<Self> {
        let shape = harness::ProfileShape { types, messages, tests, decisions };
        Ok(Self(harness::seeded_equilibrium_profile(seed, shape).py_err()?))
    }

    #[getter]
    fn num_types(&self) -> usize {
        self.0.num_types()
    }

    #[getter]
    fn num_messages(&self) -> usize {
        self.0.num_messages()
    }

    #[getter]
    fn num_tests(&self) -> usize {
        self.0.num_tests()
    }

    #[getter]
    fn num_decisions(&self) -> usize {
        self.0.num_decisions()
    }

    fn is_canonical(&self) -> bool {
        self.0.is_canonical()
    }

    /// `scf[type][decision]`: probability of each decision given the type.
    fn scf(&self) -> Vec<Vec<f64>> {
        self.0.scf()
    }

    fn equilibrium_payoffs(&self) -> Vec<f64> {
        self.0.equilibrium_payoffs()
    }

    #[pyo3(signature = (tol = 1e-10))]
    fn deviation_search<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &harness::exhaustive_deviation_search(&self.0, tol))
    }

    /// Direct, truthful, full-effort profile with the same choice function,
    /// and a report comparing the two.
    #[pyo3(signature = (tol = 1e-10))]
    fn canonicalize<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<(PyProfile, Bound<'py, PyAny>)> {
        let (c, report) = harness::canonicalize(&self.0, tol).py_err()?;
        Ok((PyProfile(c), to_py(py, &report)?))
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }
}

#[pymodule]
fn veritest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("VeritestError", m.py().get_type::<VeritestError>())?;
    m.add_class::<PyMeasure>()?;
    m.add_class::<PyTransition>()?;
    m.add_class::<PyWitness>()?;
    m.add_class::<PyPassageMatrix>()?;
    m.add_class::<PyFiniteAuthRate>()?;
    m.add_class::<PyTypeDistribution>()?;
    m.add_class::<PyPrecisionKernel>()?;
    m.add_class::<PyAuthRate>()?;
    m.add_class::<PyCost>()?;
    m.add_class::<PyMechanism>()?;
    m.add_class::<PyAuction>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(fq_compose, m)?)?;
    m.add_function(wrap_pyfunction!(myerson_virtual_value, m)?)?;
    m.add_function(wrap_pyfunction!(virtual_value, m)?)?;
    m.add_function(wrap_pyfunction!(virtual_value_table, m)?)?;
    m.add_function(wrap_pyfunction!(solve_pricing, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sale, m)?)?;
    m.add_function(wrap_pyfunction!(solve_auction, m)?)?;
    m.add_function(wrap_pyfunction!(check_ic, m)?)?;
    m.add("IC_TOL", veritest_core::IC_TOL)?;
    m.add("WITNESS_TOL", veritest_core::WITNESS_TOL)?;
    Ok(())
}
