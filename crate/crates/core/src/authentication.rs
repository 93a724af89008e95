//! Authentication rates on finite type spaces: the probability that a type
//! passes the test assigned to a report.

use serde::Serialize;

use crate::discernment::binary::{half_line, intersect, least_violating, Segment};
use crate::discernment::{first_failure, PassageMatrix};
use crate::{Error, Result, PROB_TOL};

/// `alpha(report | type)` on a finite set of labelled types.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteAuthRate {
    types: Vec<String>,
    /// Indexed `[report][type]`.
    alpha: Vec<Vec<f64>>,
}

impl FiniteAuthRate {
    pub fn new(types: Vec<String>, alpha: Vec<Vec<f64>>) -> Result<Self> {
        let n = types.len();
        if n == 0 {
            return Err(Error::InvalidInput("no types".into()));
        }
        if alpha.len() != n || alpha.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!("authentication matrix must be {n} x {n}")));
        }
        for row in &alpha {
            for &v in row {
                if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&v) || !v.is_finite() {
                    return Err(Error::InvalidInput(format!("authentication rate {v} outside [0, 1]")));
                }
            }
        }
        let alpha = alpha.into_iter().map(|r| r.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()).collect();
        Ok(Self { types, alpha })
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    /// Probability that `ty` is authenticated as `report`.
    pub fn get(&self, report: usize, ty: usize) -> f64 {
        self.alpha[report][ty]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    /// Every type is authenticated as itself at least as often as any other
    /// type is, and at least as often as it is authenticated as any other
    /// report.
    pub fn is_diagonally_dominant(&self) -> bool {
        let n = self.num_types();
        (0..n).all(|i| (0..n).all(|j| self.get(i, i) >= self.get(i, j) && self.get(i, i) >= self.get(j, i)))
    }

    /// `ty` is authenticated as its own report no more often than any other
    /// type is.
    pub fn is_minimal(&self, ty: usize) -> bool {
        (0..self.num_types()).all(|t| self.get(ty, ty) <= self.get(ty, t) + PROB_TOL)
    }
}

/// A triple of types that breaks the most-discerning condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationCertificate {
    /// The type that would mimic.
    pub theta1: usize,
    /// The report whose test is being compared.
    pub theta2: usize,
    /// The report whose test it fails to dominate.
    pub theta3: usize,
    /// Size of the violation at the least-violating mixing weight.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaCheck {
    pub most_discerning: bool,
    pub certificate: Option<ViolationCertificate>,
    /// The triple-product shortcut was used.
    pub product_form: bool,
}

fn pair_check(a: &FiniteAuthRate, t2: usize, t3: usize) -> Option<ViolationCertificate> {
    let (p_tau, p_psi) = (a.get(t2, t2), a.get(t3, t2));
    let lines: Vec<_> = (0..a.num_types())
        .map(|t1| half_line(p_tau, p_psi, a.get(t2, t1), a.get(t3, t1)).0)
        .collect();
    match intersect(&lines) {
        Segment::Interval(..) => None,
        Segment::Empty(_) => {
            let (lambda, slack) = least_violating(&lines);
            let theta1 = (0..lines.len())
                .max_by(|&i, &j| lines[i].violation(lambda).total_cmp(&lines[j].violation(lambda)))
                .unwrap_or(0);
            Some(ViolationCertificate { theta1, theta2: t2, theta3: t3, slack })
        }
    }
}

fn product_check(a: &FiniteAuthRate) -> Option<ViolationCertificate> {
    let n = a.num_types();
    let mut worst: Option<ViolationCertificate> = None;
    for t1 in 0..n {
        for t2 in 0..n {
            for t3 in 0..n {
                let slack = a.get(t3, t2) * a.get(t2, t1) - a.get(t3, t1) * a.get(t2, t2);
                if slack > PROB_TOL && worst.as_ref().is_none_or(|w| slack > w.slack) {
                    worst = Some(ViolationCertificate { theta1: t1, theta2: t2, theta3: t3, slack });
                }
            }
        }
    }
    worst
}

/// Whether `a` can be induced by a most-discerning testing environment,
/// with a violating triple when it cannot.
pub fn check_most_discerning_alpha(a: &FiniteAuthRate) -> AlphaCheck {
    if a.is_diagonally_dominant() {
        let certificate = product_check(a);
        return AlphaCheck { most_discerning: certificate.is_none(), certificate, product_form: true };
    }
    check_most_discerning_alpha_general(a)
}

/// The full two-case check, without the triple-product shortcut.
pub fn check_most_discerning_alpha_general(a: &FiniteAuthRate) -> AlphaCheck {
    let n = a.num_types();
    let certificate = (0..n)
        .flat_map(|t2| (0..n).map(move |t3| (t2, t3)))
        .filter(|(t2, t3)| t2 != t3)
        .find_map(|(t2, t3)| pair_check(a, t2, t3));
    AlphaCheck { most_discerning: certificate.is_none(), certificate, product_form: false }
}

pub fn is_most_discerning_alpha(a: &FiniteAuthRate) -> bool {
    check_most_discerning_alpha(a).most_discerning
}

/// Same minimal types, and identical rows for every type that is not
/// minimal.
pub fn essentially_equal(a: &FiniteAuthRate, b: &FiniteAuthRate) -> Result<bool> {
    if a.types != b.types {
        return Err(Error::InvalidInput("authentication rates have different type labels".into()));
    }
    for t in 0..a.num_types() {
        let minimal = a.is_minimal(t);
        if minimal != b.is_minimal(t) {
            return Ok(false);
        }
        if !minimal && a.alpha[t].iter().zip(&b.alpha[t]).any(|(x, y)| (x - y).abs() > PROB_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Authentication rate of a testing function: the chance that each type
/// passes the test assigned to each report.
pub fn induce_alpha(env: &PassageMatrix, assignment: &[usize]) -> Result<FiniteAuthRate> {
    if !env.is_binary() {
        return Err(Error::InvalidInput("authentication rates need pass/fail tests".into()));
    }
    if assignment.iter().any(|&t| t >= env.num_tests()) {
        return Err(Error::InvalidInput("test index out of range".into()));
    }
    if let Some((theta, psi)) = first_failure(env, assignment)? {
        return Err(Error::NotDiscerning {
            type_label: env.types()[theta].clone(),
            test: env.tests()[assignment[theta]].clone(),
            against: env.tests()[psi].clone(),
        });
    }
    let alpha = assignment
        .iter()
        .map(|&test| (0..env.num_types()).map(|ty| env.pass_rate(test, ty)).collect())
        .collect();
    FiniteAuthRate::new(env.types().to_vec(), alpha)
}

/// One pass/fail test per report, passed by each type with its
/// authentication probability, together with the identity assignment.
pub fn environment_from_alpha(a: &FiniteAuthRate) -> Result<(PassageMatrix, Vec<usize>)> {
    let check = check_most_discerning_alpha(a);
    if let Some(c) = check.certificate {
        return Err(Error::NotMostDiscerning(
            a.types[c.theta1].clone(),
            a.types[c.theta2].clone(),
            a.types[c.theta3].clone(),
        ));
    }
    let tests = a.types.iter().map(|t| format!("tau_{t}")).collect();
    let env = PassageMatrix::binary(a.types.clone(), tests, a.alpha.clone())?;
    Ok((env, (0..a.num_types()).collect()))
}
