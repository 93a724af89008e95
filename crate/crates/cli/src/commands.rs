use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use veritest_core::authentication::check_most_discerning_alpha;
use veritest_core::continuous::{virtual_value_table, ContinuousAuthRate, PrecisionKernel};
use veritest_core::discernment::{
    check_discerning, compare, most_discerning_function, most_discerning_tests, Comparison, PassageMatrix,
};
use veritest_core::harness::{
    canonicalize, check_auction_ic, check_ic, check_mechanism_ic, seeded_equilibrium_profile, AuctionIcReport,
    AuthSource, IcReport, ProfileShape,
};
use veritest_core::mechanisms::{solve_auction, solve_nonlinear_pricing, solve_single_good, MechanismFlags};
use veritest_core::IC_TOL;

use crate::document::{Document, ProfileDocument};
use crate::output::{csv_text, json_text, Sink};

/// Whether the command's check passed; errors are reported separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Settings shared by every subcommand.
pub struct Settings {
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Settings {
    fn grid(&self, doc: Option<&Document>, default: usize) -> usize {
        self.grid.or_else(|| doc.and_then(Document::grid)).unwrap_or(default)
    }

    fn sink(&self, doc: Option<&Document>) -> Result<Sink> {
        Sink::new(self.output.clone().or_else(|| doc.and_then(Document::output_dir)))
    }
}

pub const MECHANISM_COLUMNS: [&str; 6] = ["theta", "q", "t", "U", "phi", "phi_myerson"];

#[derive(Serialize)]
struct WitnessRecord<'a> {
    theta: &'a str,
    tau: &'a str,
    psi: &'a str,
    holds: bool,
    lambda_interval: Option<(f64, f64)>,
    degenerate: bool,
    blocking_type: Option<&'a str>,
    conversion: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct Relation<'a> {
    theta: &'a str,
    tau: &'a str,
    psi: &'a str,
    comparison: Comparison,
}

#[derive(Serialize)]
struct MostDiscerning<'a> {
    theta: &'a str,
    tests: Vec<&'a str>,
}

#[derive(Serialize)]
struct RelationTable<'a> {
    relations: Vec<Relation<'a>>,
    most_discerning: Vec<MostDiscerning<'a>>,
    most_discerning_function: Option<Vec<&'a str>>,
}

pub fn check_discernment(
    path: &Path,
    theta: Option<&str>,
    tau: Option<&str>,
    psi: Option<&str>,
) -> Result<Verdict> {
    let doc = Document::load(path)?;
    let env = doc.environment()?;
    match (theta, tau, psi) {
        (Some(theta), Some(tau), Some(psi)) => {
            let (th, a, b) = (env.type_index(theta)?, env.test_index(tau)?, env.test_index(psi)?);
            let w = check_discerning(&env, th, a, b)?;
            let record = WitnessRecord {
                theta,
                tau,
                psi,
                holds: w.holds,
                lambda_interval: w.lambda_interval,
                degenerate: w.degenerate,
                blocking_type: w.blocking_type.map(|t| env.types()[t].as_str()),
                conversion: w.conversion.map(|k| k.rows()),
            };
            print!("{}", json_text(&record)?);
            Ok(Verdict::from(w.holds))
        }
        (None, None, None) => {
            print!("{}", json_text(&relation_table(&env)?)?);
            Ok(Verdict::Pass)
        }
        _ => bail!("give all of --type, --tau and --psi, or none of them for the full table"),
    }
}

fn relation_table(env: &PassageMatrix) -> Result<RelationTable<'_>> {
    let (types, tests) = (env.types(), env.tests());
    let mut relations = Vec::new();
    for th in 0..env.num_types() {
        for a in 0..env.num_tests() {
            for b in a + 1..env.num_tests() {
                relations.push(Relation { theta: &types[th], tau: &tests[a], psi: &tests[b], comparison: compare(env, th, a, b)? });
            }
        }
    }
    let most_discerning = (0..env.num_types())
        .map(|th| {
            Ok(MostDiscerning {
                theta: &types[th],
                tests: most_discerning_tests(env, th)?.into_iter().map(|k| tests[k].as_str()).collect(),
            })
        })
        .collect::<Result<_>>()?;
    let most_discerning_function =
        most_discerning_function(env)?.map(|f| f.into_iter().map(|k| tests[k].as_str()).collect());
    Ok(RelationTable { relations, most_discerning, most_discerning_function })
}

fn lambda_label(v: f64) -> String {
    format!("phi_lambda_{v}")
}

pub fn virtual_value(path: &Path, lambdas: Option<Vec<f64>>, settings: &Settings) -> Result<Verdict> {
    let doc = Document::load(path)?;
    let dist = doc.distribution()?;
    let n = settings.grid(Some(&doc), 101);
    let mut columns: Vec<(String, PrecisionKernel)> = Vec::new();
    match lambdas {
        Some(ls) => {
            for l in ls {
                columns.push((lambda_label(l), PrecisionKernel::constant(dist.lo(), dist.hi(), l)?));
            }
        }
        None if doc.continuous_alpha().is_ok() => {
            let alpha = doc.continuous_alpha()?;
            columns.push(("phi".into(), doc.kernel(&alpha)?));
        }
        None => {
            for l in [0.0, 1.0, 2.0, 3.0] {
                columns.push((lambda_label(l), PrecisionKernel::constant(dist.lo(), dist.hi(), l)?));
            }
        }
    }
    let tables = columns.iter().map(|(_, k)| virtual_value_table(&dist, k, n)).collect::<Result<Vec<_>, _>>()?;
    let mut header = vec!["theta".to_string(), "phi_myerson".to_string()];
    header.extend(columns.iter().map(|(name, _)| name.clone()));
    let first = &tables[0];
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![first.theta[i], first.phi_myerson[i]];
            row.extend(tables.iter().map(|t| t.phi[i]));
            row
        })
        .collect();
    settings.sink(Some(&doc))?.primary("virtual_values.csv", &csv_text(&header, &rows, None)?)?;
    Ok(Verdict::Pass)
}

/// Interim reports of every bidder, as written by `solve auction` and
/// recomputed by `verify`.
#[derive(Serialize)]
struct InterimReport {
    bidders: Vec<IcReport>,
    passed: bool,
}

#[derive(Serialize)]
struct MechanismSummary<'a> {
    kind: &'a str,
    grid_n: usize,
    revenue: f64,
    virtual_surplus: f64,
    theta_star: Option<f64>,
    flags: &'a MechanismFlags,
    ic: &'a IcReport,
}

#[derive(Serialize)]
struct AuctionSummary {
    kind: &'static str,
    grid_n: usize,
    revenue: f64,
    reserves: Vec<Option<f64>>,
    ic: InterimReport,
    ex_post: AuctionIcReport,
}

fn header() -> Vec<String> {
    MECHANISM_COLUMNS.iter().map(|s| s.to_string()).collect()
}

pub fn solve(path: &Path, kind: &str, settings: &Settings) -> Result<Verdict> {
    let doc = Document::load(path)?;
    let n = settings.grid(Some(&doc), 201);
    let tol = settings.tol.unwrap_or(IC_TOL);
    let sink = settings.sink(Some(&doc))?;
    if kind == "auction" {
        let agents = doc.agents()?;
        let (bidders, alphas): (Vec<_>, Vec<_>) = agents.into_iter().unzip();
        let sol = solve_auction(&bidders, n)?;
        let mut rows = Vec::new();
        let mut agent = Vec::new();
        let mut reports = Vec::new();
        for (i, (b, a)) in sol.bidders.iter().zip(&alphas).enumerate() {
            for j in 0..b.theta.len() {
                rows.push(vec![b.theta[j], b.q[j], b.t[j], b.u[j], b.phi[j], b.phi_myerson[j]]);
                agent.push(i.to_string());
            }
            reports.push(check_ic(&b.theta, &b.q, &b.t, AuthSource::Continuous(a), tol)?);
        }
        let ex_post = check_auction_ic(&sol, &alphas, tol)?;
        let passed = reports.iter().all(|r| r.passed);
        let mut columns = vec!["agent".to_string()];
        columns.extend(header());
        sink.primary("mechanism.csv", &csv_text(&columns, &rows, Some(&agent))?)?;
        let summary = AuctionSummary {
            kind: "auction",
            grid_n: n,
            revenue: sol.revenue,
            reserves: sol.bidders.iter().map(|b| b.reserve).collect(),
            ic: InterimReport { bidders: reports, passed },
            ex_post,
        };
        let ok = summary.ex_post.passed;
        sink.report("summary.json", &json_text(&summary)?)?;
        return Ok(Verdict::from(ok));
    }
    let dist = doc.distribution()?;
    let alpha = doc.continuous_alpha()?;
    let kernel = doc.kernel(&alpha)?;
    let mut m = match kind {
        "pricing" => solve_nonlinear_pricing(&dist, &kernel, &doc.cost()?, n)?,
        "sale" => solve_single_good(&dist, &kernel, n)?,
        other => bail!("unknown mechanism {other:?}; expected pricing, sale or auction"),
    };
    m.verify_upper_bound(&dist, &alpha, &kernel, tol)?;
    let ic = check_mechanism_ic(&m, AuthSource::Continuous(&alpha), tol)?;
    let rows: Vec<Vec<f64>> =
        (0..m.theta.len()).map(|i| vec![m.theta[i], m.q[i], m.t[i], m.u[i], m.phi[i], m.phi_myerson[i]]).collect();
    sink.primary("mechanism.csv", &csv_text(&header(), &rows, None)?)?;
    let summary = MechanismSummary {
        kind,
        grid_n: n,
        revenue: m.revenue,
        virtual_surplus: m.virtual_surplus,
        theta_star: m.threshold,
        flags: &m.flags,
        ic: &ic,
    };
    sink.report("summary.json", &json_text(&summary)?)?;
    Ok(Verdict::from(ic.passed))
}

/// Columns `theta, q, t` of a mechanism CSV, split by agent when present.
fn read_mechanism(path: &Path) -> Result<Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| anyhow!("{}: missing column {name}", path.display()))
    };
    let (theta, q, t) = (col("theta")?, col("q")?, col("t")?);
    let agent = headers.iter().position(|h| h == "agent");
    let mut groups: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut current: Option<String> = None;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let field = |c: usize| -> Result<f64> {
            let s = record.get(c).unwrap_or("");
            s.parse().map_err(|_| anyhow!("{}:{line}: cannot read {s:?} as a number", path.display()))
        };
        let key = agent.map(|a| record.get(a).unwrap_or("").to_string());
        if groups.is_empty() || key != current {
            groups.push(Default::default());
            current = key;
        }
        let g = groups.last_mut().expect("a group was just pushed");
        g.0.push(field(theta)?);
        g.1.push(field(q)?);
        g.2.push(field(t)?);
    }
    if groups.is_empty() {
        bail!("{}: no rows", path.display());
    }
    Ok(groups)
}

pub fn verify(path: &Path, mechanism: &Path, settings: &Settings) -> Result<Verdict> {
    let doc = Document::load(path)?;
    let tol = settings.tol.unwrap_or(IC_TOL);
    let groups = read_mechanism(mechanism)?;
    if doc.has_agents() {
        let alphas: Vec<ContinuousAuthRate> = doc.agents()?.into_iter().map(|(_, a)| a).collect();
        if alphas.len() != groups.len() {
            bail!("{} has {} agents but the document has {}", mechanism.display(), groups.len(), alphas.len());
        }
        let bidders = groups
            .iter()
            .zip(&alphas)
            .map(|((theta, q, t), a)| check_ic(theta, q, t, AuthSource::Continuous(a), tol))
            .collect::<Result<Vec<_>, _>>()?;
        let passed = bidders.iter().all(|r| r.passed);
        print!("{}", json_text(&InterimReport { bidders, passed })?);
        return Ok(Verdict::from(passed));
    }
    if groups.len() != 1 {
        bail!("{} has several agents; the document describes one", mechanism.display());
    }
    let alpha = doc.continuous_alpha()?;
    let (theta, q, t) = &groups[0];
    let report = check_ic(theta, q, t, AuthSource::Continuous(&alpha), tol)?;
    print!("{}", json_text(&report)?);
    Ok(Verdict::from(report.passed))
}

#[derive(Serialize)]
struct Certificate<'a> {
    theta1: &'a str,
    theta2: &'a str,
    theta3: &'a str,
    slack: f64,
}

#[derive(Serialize)]
struct AlphaReport<'a> {
    most_discerning: bool,
    product_form: bool,
    certificate: Option<Certificate<'a>>,
}

pub fn validate_alpha(path: &Path) -> Result<Verdict> {
    let doc = Document::load(path)?;
    let alpha = doc.finite_alpha()?;
    let check = check_most_discerning_alpha(&alpha);
    let types = alpha.types();
    let report = AlphaReport {
        most_discerning: check.most_discerning,
        product_form: check.product_form,
        certificate: check.certificate.as_ref().map(|c| Certificate {
            theta1: &types[c.theta1],
            theta2: &types[c.theta2],
            theta3: &types[c.theta3],
            slack: c.slack,
        }),
    };
    print!("{}", json_text(&report)?);
    Ok(Verdict::from(check.most_discerning))
}

pub fn canonicalize_profile(path: &Path, settings: &Settings) -> Result<Verdict> {
    let doc = Document::load(path)?;
    let tol = settings.tol.unwrap_or(1e-10);
    let profile = doc.profile()?;
    let (canonical, report) = canonicalize(&profile, tol)?;
    let sink = settings.sink(Some(&doc))?;
    sink.primary("canonical.toml", &ProfileDocument::from_profile(&canonical).to_toml())?;
    sink.report("report.json", &json_text(&report)?)?;
    Ok(Verdict::from(report.canonical_incentive_compatible && report.scf_difference <= tol))
}

pub fn random_profile(shape: ProfileShape, settings: &Settings) -> Result<Verdict> {
    let profile = seeded_equilibrium_profile(settings.seed, shape)?;
    settings.sink(None)?.primary("profile.toml", &ProfileDocument::from_profile(&profile).to_toml())?;
    Ok(Verdict::Pass)
}
