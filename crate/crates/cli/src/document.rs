//! Environment documents: TOML with the sections `[types]`, `[tests]`,
//! `[alpha]`, `[cost]`, `[[agents]]`, `[grid]`, `[output]` and `[profile]`.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Spanned;
use veritest_core::authentication::FiniteAuthRate;
use veritest_core::continuous::{precision_from_alpha, ContinuousAuthRate, PrecisionFn, PrecisionKernel, TypeDistribution};
use veritest_core::discernment::PassageMatrix;
use veritest_core::harness::FiniteProfile;
use veritest_core::markov::{Measure, ScoreSet};
use veritest_core::mechanisms::{Bidder, CostFunction};

/// Problem with a document, anchored to a line when one is known.
#[derive(Debug)]
pub struct DocError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for DocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.path.display())?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
            if let Some(col) = self.column {
                write!(f, ":{col}")?;
            }
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for DocError {}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TypesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    /// `uniform`, `truncated_exponential` or `tabulated`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TestsSection {
    pub labels: Vec<String>,
    /// Score values; pass/fail when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
    /// Pass rates `[test][type]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<Vec<f64>>>,
    /// Score distributions `[test][type][score]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dists: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSection {
    /// Finite rates `[report][type]`.
    pub matrix: Option<Vec<Vec<f64>>>,
    /// `exponential`, `unverified` or `power_kink` on the `[types]` interval.
    pub preset: Option<String>,
    pub precision: Option<f64>,
    pub precision_points: Option<Vec<f64>>,
    pub precision_values: Option<Vec<f64>>,
    pub sigma: Option<f64>,
    /// Tabulated rates `values[report][type]` on `grid`.
    pub grid: Option<Vec<f64>>,
    pub values: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    /// `quadratic` or `power`.
    pub kind: String,
    pub coef: f64,
    pub exponent: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub lo: f64,
    pub hi: f64,
    pub distribution: Option<String>,
    pub rate: Option<f64>,
    pub points: Option<Vec<f64>>,
    pub density: Option<Vec<f64>>,
    pub precision: Option<f64>,
    pub precision_points: Option<Vec<f64>>,
    pub precision_values: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for written artifacts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// A finite profile in document form.
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
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
    /// `[type][message][test][score]`.
    pub performance: Vec<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    types: Option<Spanned<TypesSection>>,
    tests: Option<Spanned<TestsSection>>,
    alpha: Option<Spanned<AlphaSection>>,
    cost: Option<Spanned<CostSection>>,
    agents: Option<Vec<Spanned<AgentSection>>>,
    grid: Option<GridSection>,
    output: Option<OutputSection>,
    profile: Option<Spanned<ProfileSection>>,
}

/// Written form of a profile document.
#[derive(Debug, Serialize)]
pub struct ProfileDocument {
    pub types: TypesSection,
    pub tests: TestsSection,
    pub profile: ProfileSection,
}

/// A parsed document together with its source, for error positions.
pub struct Document {
    path: PathBuf,
    source: String,
    raw: RawDocument,
}

fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

impl Document {
    pub fn load(path: &Path) -> Result<Self, DocError> {
        let source = std::fs::read_to_string(path).map_err(|e| DocError {
            path: path.to_path_buf(),
            line: None,
            column: None,
            message: e.to_string(),
        })?;
        Self::parse(path, source)
    }

    pub fn parse(path: &Path, source: String) -> Result<Self, DocError> {
        let raw: RawDocument = match toml::from_str(&source) {
            Ok(raw) => raw,
            Err(e) => {
                let (line, column) = e.span().map(|s| line_col(&source, s.start)).unzip();
                return Err(DocError { path: path.to_path_buf(), line, column, message: e.message().trim().to_string() });
            }
        };
        let doc = Self { path: path.to_path_buf(), source, raw };
        if let (Some(_), Some(alpha)) = (&doc.raw.tests, &doc.raw.alpha) {
            return Err(doc.error(alpha.span(), "a document holds either [tests] or [alpha], not both"));
        }
        Ok(doc)
    }

    pub fn error(&self, span: Range<usize>, message: impl Into<String>) -> DocError {
        let (line, column) = line_col(&self.source, span.start);
        DocError { path: self.path.clone(), line: Some(line), column: Some(column), message: message.into() }
    }

    fn unanchored(&self, message: impl Into<String>) -> DocError {
        DocError { path: self.path.clone(), line: None, column: None, message: message.into() }
    }

    fn section<'a, T>(&self, s: &'a Option<Spanned<T>>, name: &str) -> Result<&'a Spanned<T>, DocError> {
        s.as_ref().ok_or_else(|| self.unanchored(format!("missing [{name}] section")))
    }

    pub fn grid(&self) -> Option<usize> {
        self.raw.grid.as_ref().and_then(|g| g.n)
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.raw.output.as_ref().and_then(|o| o.dir.as_ref()).map(PathBuf::from)
    }

    pub fn has_agents(&self) -> bool {
        self.raw.agents.is_some()
    }

    fn type_labels(&self, fallback: usize) -> Vec<String> {
        self.raw.types.as_ref().and_then(|t| t.get_ref().labels.clone()).unwrap_or_else(|| labels("theta", fallback))
    }

    /// Finite environment from `[types]` and `[tests]`.
    pub fn environment(&self) -> Result<PassageMatrix, DocError> {
        let tests = self.section(&self.raw.tests, "tests")?;
        let span = tests.span();
        let t = tests.get_ref();
        let bad = |e: veritest_core::Error| self.error(span.clone(), e.to_string());
        match (&t.rates, &t.dists) {
            (Some(rates), None) => {
                if t.scores.is_some() {
                    return Err(self.error(span, "pass rates imply pass/fail scores; use dists with scores"));
                }
                let n = rates.first().map_or(0, Vec::len);
                let types = self.type_labels(n);
                for row in rates {
                    if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                        return Err(self.error(span, format!("pass rate {p} is outside [0, 1]")));
                    }
                }
                PassageMatrix::binary(types, t.labels.clone(), rates.clone()).map_err(bad)
            }
            (None, Some(dists)) => {
                let scores = match &t.scores {
                    Some(s) => ScoreSet::new(s.clone()).map_err(bad)?,
                    None => ScoreSet::binary(),
                };
                let n = dists.first().map_or(0, Vec::len);
                let types = self.type_labels(n);
                let rows = dists
                    .iter()
                    .map(|test| test.iter().map(|w| Measure::new(scores.clone(), w.clone())).collect())
                    .collect::<Result<Vec<Vec<_>>, _>>()
                    .map_err(bad)?;
                PassageMatrix::new(types, t.labels.clone(), rows).map_err(bad)
            }
            _ => Err(self.error(span, "[tests] needs exactly one of rates or dists")),
        }
    }

    /// Finite authentication rates from `[alpha] matrix`.
    pub fn finite_alpha(&self) -> Result<FiniteAuthRate, DocError> {
        let alpha = self.section(&self.raw.alpha, "alpha")?;
        let matrix = alpha
            .get_ref()
            .matrix
            .as_ref()
            .ok_or_else(|| self.error(alpha.span(), "finite authentication rates need a matrix"))?;
        FiniteAuthRate::new(self.type_labels(matrix.len()), matrix.clone())
            .map_err(|e| self.error(alpha.span(), e.to_string()))
    }

    fn interval_distribution(
        &self,
        span: Range<usize>,
        lo: Option<f64>,
        hi: Option<f64>,
        kind: Option<&str>,
        rate: Option<f64>,
        points: Option<&Vec<f64>>,
        density: Option<&Vec<f64>>,
    ) -> Result<TypeDistribution, DocError> {
        let bad = |e: veritest_core::Error| self.error(span.clone(), e.to_string());
        let (lo, hi) = match (lo, hi) {
            (Some(lo), Some(hi)) if lo < hi => (lo, hi),
            (Some(lo), Some(hi)) => return Err(self.error(span, format!("interval needs lo < hi, got [{lo}, {hi}]"))),
            _ => return Err(self.error(span, "an interval of types needs lo and hi")),
        };
        match kind.unwrap_or("uniform") {
            "uniform" => TypeDistribution::uniform(lo, hi).map_err(bad),
            "truncated_exponential" => {
                let rate = rate.ok_or_else(|| self.error(span.clone(), "truncated_exponential needs rate"))?;
                TypeDistribution::truncated_exponential(lo, hi, rate).map_err(bad)
            }
            "tabulated" => {
                let (Some(points), Some(density)) = (points, density) else {
                    return Err(self.error(span, "tabulated distribution needs points and density"));
                };
                if points.first() != Some(&lo) || points.last() != Some(&hi) {
                    return Err(self.error(span, "tabulated points must run from lo to hi"));
                }
                TypeDistribution::tabulated(points.clone(), density.clone()).map_err(bad)
            }
            other => Err(self.error(span, format!("unknown distribution {other:?}"))),
        }
    }

    /// Type distribution on the `[types]` interval.
    pub fn distribution(&self) -> Result<TypeDistribution, DocError> {
        let types = self.section(&self.raw.types, "types")?;
        let t = types.get_ref();
        self.interval_distribution(
            types.span(),
            t.lo,
            t.hi,
            t.distribution.as_deref(),
            t.rate,
            t.points.as_ref(),
            t.density.as_ref(),
        )
    }

    fn precision(
        &self,
        span: Range<usize>,
        constant: Option<f64>,
        points: Option<&Vec<f64>>,
        values: Option<&Vec<f64>>,
    ) -> Result<PrecisionFn, DocError> {
        let result = match (constant, points, values) {
            (Some(c), None, None) => PrecisionFn::constant(c),
            (None, Some(p), Some(v)) => PrecisionFn::piecewise_linear(p.clone(), v.clone()),
            (None, None, None) => PrecisionFn::constant(0.0),
            _ => return Err(self.error(span, "give either precision or precision_points with precision_values")),
        };
        result.map_err(|e| self.error(span, e.to_string()))
    }

    /// Authentication rates on the `[types]` interval.
    pub fn continuous_alpha(&self) -> Result<ContinuousAuthRate, DocError> {
        let dist = self.distribution()?;
        let (lo, hi) = (dist.lo(), dist.hi());
        let alpha = self.section(&self.raw.alpha, "alpha")?;
        let span = alpha.span();
        let a = alpha.get_ref();
        let bad = |e: veritest_core::Error| self.error(span.clone(), e.to_string());
        if let (Some(grid), Some(values)) = (&a.grid, &a.values) {
            if grid.first() != Some(&lo) || grid.last() != Some(&hi) {
                return Err(self.error(span, "alpha grid must run from lo to hi"));
            }
            return ContinuousAuthRate::tabulated(grid.clone(), values.clone()).map_err(bad);
        }
        match a.preset.as_deref() {
            Some("exponential") => {
                let p = self.precision(span.clone(), a.precision, a.precision_points.as_ref(), a.precision_values.as_ref())?;
                ContinuousAuthRate::exponential(lo, hi, p).map_err(bad)
            }
            Some("unverified") => ContinuousAuthRate::unverified(lo, hi).map_err(bad),
            Some("power_kink") => {
                let sigma = a.sigma.ok_or_else(|| self.error(span.clone(), "power_kink needs sigma"))?;
                ContinuousAuthRate::power_kink(lo, hi, sigma).map_err(bad)
            }
            Some(other) => Err(self.error(span, format!("unknown alpha preset {other:?}"))),
            None => Err(self.error(span, "[alpha] needs a preset or grid with values")),
        }
    }

    /// Discount kernel implied by the continuous authentication rates.
    pub fn kernel(&self, alpha: &ContinuousAuthRate) -> Result<PrecisionKernel, DocError> {
        let span = self.raw.alpha.as_ref().map_or(0..0, |a| a.span());
        precision_from_alpha(alpha).map_err(|e| self.error(span, e.to_string()))
    }

    pub fn cost(&self) -> Result<CostFunction, DocError> {
        let Some(cost) = &self.raw.cost else {
            return Ok(CostFunction::quadratic(1.0).expect("unit coefficient is valid"));
        };
        let c = cost.get_ref();
        let result = match (c.kind.as_str(), c.exponent) {
            ("quadratic", None) => CostFunction::quadratic(c.coef),
            ("power", Some(e)) => CostFunction::power(c.coef, e),
            ("power", None) => return Err(self.error(cost.span(), "power cost needs exponent")),
            (other, _) => return Err(self.error(cost.span(), format!("unknown cost kind {other:?}"))),
        };
        result.map_err(|e| self.error(cost.span(), e.to_string()))
    }

    /// Bidders with their authentication rates.
    pub fn agents(&self) -> Result<Vec<(Bidder, ContinuousAuthRate)>, DocError> {
        let agents = self.raw.agents.as_ref().ok_or_else(|| self.unanchored("missing [[agents]] tables"))?;
        if agents.is_empty() {
            return Err(self.unanchored("at least one agent is needed"));
        }
        agents
            .iter()
            .map(|agent| {
                let span = agent.span();
                let a = agent.get_ref();
                let dist = self.interval_distribution(
                    span.clone(),
                    Some(a.lo),
                    Some(a.hi),
                    a.distribution.as_deref(),
                    a.rate,
                    a.points.as_ref(),
                    a.density.as_ref(),
                )?;
                let p = self.precision(span.clone(), a.precision, a.precision_points.as_ref(), a.precision_values.as_ref())?;
                let alpha = ContinuousAuthRate::exponential(a.lo, a.hi, p).map_err(|e| self.error(span.clone(), e.to_string()))?;
                let kernel = precision_from_alpha(&alpha).map_err(|e| self.error(span.clone(), e.to_string()))?;
                Ok((Bidder { dist, kernel }, alpha))
            })
            .collect()
    }

    /// Finite profile from `[types]`, `[tests]` and `[profile]`.
    pub fn profile(&self) -> Result<FiniteProfile, DocError> {
        let env = self.environment()?;
        let section = self.section(&self.raw.profile, "profile")?;
        let p = section.get_ref();
        let performance = p
            .performance
            .iter()
            .map(|by_message| {
                by_message
                    .iter()
                    .map(|by_test| by_test.iter().map(|w| Measure::new(env.scores().clone(), w.clone())).collect())
                    .collect()
            })
            .collect::<Result<Vec<Vec<Vec<_>>>, _>>()
            .map_err(|e| self.error(section.span(), e.to_string()))?;
        FiniteProfile::new(
            env,
            p.messages.clone(),
            p.decisions.clone(),
            p.utility.clone(),
            p.reporting.clone(),
            p.testing.clone(),
            p.decision.clone(),
            performance,
        )
        .map_err(|e| self.error(section.span(), e.to_string()))
    }
}

impl ProfileDocument {
    pub fn from_profile(p: &FiniteProfile) -> Self {
        let env = &p.env;
        let binary = env.is_binary() && env.scores().values() == [0.0, 1.0];
        let tests = if binary {
            TestsSection {
                labels: env.tests().to_vec(),
                scores: None,
                rates: Some((0..env.num_tests()).map(|k| (0..env.num_types()).map(|t| env.pass_rate(k, t)).collect()).collect()),
                dists: None,
            }
        } else {
            TestsSection {
                labels: env.tests().to_vec(),
                scores: Some(env.scores().values().to_vec()),
                rates: None,
                dists: Some(
                    (0..env.num_tests())
                        .map(|k| (0..env.num_types()).map(|t| env.dist(k, t).weights().to_vec()).collect())
                        .collect(),
                ),
            }
        };
        Self {
            types: TypesSection { labels: Some(env.types().to_vec()), ..Default::default() },
            tests,
            profile: ProfileSection {
                messages: p.messages.clone(),
                decisions: p.decisions.clone(),
                utility: p.utility.clone(),
                reporting: p.reporting.clone(),
                testing: p.testing.clone(),
                decision: p.decision.clone(),
                performance: p
                    .performance
                    .iter()
                    .map(|m| m.iter().map(|k| k.iter().map(|d| d.weights().to_vec()).collect()).collect())
                    .collect(),
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profile documents serialize")
    }
}
