//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use veritest_core::authentication::{
    check_most_discerning_alpha, environment_from_alpha, essentially_equal, induce_alpha, FiniteAuthRate,
};
use veritest_core::continuous::{
    virtual_value_table, ContinuousAuthRate, PrecisionFn, PrecisionKernel, TypeDistribution,
};
use veritest_core::discernment::{
    check_discerning, check_discerning_on_interval, compare, mixed_conversion, most_discerning_tests, Comparison,
    PassageMatrix,
};
use veritest_core::harness::{
    canonicalize, check_mechanism_ic, exhaustive_deviation_search, seeded_equilibrium_profile, AuthSource,
    ProfileShape,
};
use veritest_core::markov::{fq_compose, Measure, ScoreSet, Transition};
use veritest_core::mechanisms::{solve_auction, solve_nonlinear_pricing, solve_single_good, Bidder, CostFunction};
use veritest_core::numerics::linspace;

#[path = "../../core/tests/common/mod.rs"]
mod common;
use common::{enumerated_segment, hausdorff, rows};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn figure_five() -> Outcome {
    let start = Instant::now();
    let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
    let closed: [fn(f64) -> f64; 4] = [
        |x| 2.0 * x - 1.0,
        |x| x - 1.0 + (x - 1.0).exp(),
        |x| x - 0.5 * (1.0 - (2.0 * (x - 1.0)).exp()),
        |x| x - (1.0 - (3.0 * (x - 1.0)).exp()) / 3.0,
    ];
    let mut worst: f64 = 0.0;
    for (lambda, f) in closed.iter().enumerate() {
        let k = PrecisionKernel::constant(0.0, 1.0, lambda as f64).unwrap();
        let table = virtual_value_table(&d, &k, 101).unwrap();
        for (x, phi) in table.theta.iter().zip(&table.phi) {
            worst = worst.max((phi - f(*x)).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-6 && secs < 1.0, format!("max error {worst:.3e}, {secs:.3} s"))
}

fn green_laffont() -> Outcome {
    let env = PassageMatrix::binary(
        labels("theta", 3),
        labels("tau", 3),
        vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]],
    )
    .unwrap();
    use Comparison::*;
    let expected = [
        (0, 0, 1, StrictlyMore),
        (0, 1, 2, StrictlyMore),
        (0, 0, 2, StrictlyMore),
        (1, 1, 2, Incomparable),
        (2, 2, 1, StrictlyMore),
        (2, 2, 0, StrictlyMore),
        (2, 1, 0, Equivalent),
    ];
    let mut mismatches = Vec::new();
    for (th, a, b, want) in expected {
        let got = compare(&env, th, a, b).unwrap();
        if got != want {
            mismatches.push(format!("theta{} tau{} tau{}: {got:?}", th + 1, a + 1, b + 1));
        }
    }
    let sets: Vec<Vec<usize>> = (0..3).map(|t| most_discerning_tests(&env, t).unwrap()).collect();
    let sets_ok = sets == vec![vec![0], vec![], vec![2]];
    let alpha = FiniteAuthRate::new(
        labels("theta", 3),
        vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]],
    )
    .unwrap();
    let check = check_most_discerning_alpha(&alpha);
    let triple = check.certificate.as_ref().map(|c| (c.theta1, c.theta2, c.theta3));
    let passed = mismatches.is_empty() && sets_ok && !check.most_discerning && triple == Some((0, 1, 2));
    outcome(passed, format!("relation mismatches {mismatches:?}, most-discerning sets {sets:?}, certificate {triple:?}"))
}

fn width(w: &veritest_core::discernment::DiscernmentWitness) -> Option<f64> {
    w.lambda_interval.map(|(lo, hi)| hi - lo)
}

fn examples_on_interval() -> Outcome {
    let grid = linspace(0.25, 0.75, 51);
    let theta = grid[25];
    let tau = |x: f64| 0.5 + 1.5 * (x - 0.5);
    let psi = |x: f64| x * (x - 0.25) + 0.375;
    let fig3 = check_discerning_on_interval(&grid, theta, tau, psi).unwrap();
    let grid_only = {
        let env = PassageMatrix::binary(
            labels("theta", 51),
            vec!["tau".into(), "psi".into()],
            vec![grid.iter().map(|&x| tau(x)).collect(), grid.iter().map(|&x| psi(x)).collect()],
        )
        .unwrap();
        check_discerning(&env, 25, 0, 1).unwrap()
    };
    let fig3_ok = fig3.holds && fig3.lambda_interval.is_some_and(|(lo, hi)| hi - lo < 1e-6 && lo <= 0.5 + 1e-6 && hi >= 0.5 - 1e-6);

    let psi1 = |x: f64| 0.75 - 4.0 * (x - 0.5).powi(2);
    let psi2 = |x: f64| 0.75 * psi1(x);
    let tau4 = |x: f64| 0.375 - 5.0 * (x - 0.5).powi(2);
    let tau_psi1 = check_discerning_on_interval(&grid, theta, tau4, psi1).unwrap().holds;
    let tau_psi2 = check_discerning_on_interval(&grid, theta, tau4, psi2).unwrap().holds;
    let psi1_psi2 = check_discerning_on_interval(&grid, theta, psi1, psi2).unwrap().holds;
    let psi2_psi1 = check_discerning_on_interval(&grid, theta, psi2, psi1).unwrap().holds;
    let fig4_ok = tau_psi1 && tau_psi2 && psi1_psi2 && !psi2_psi1;
    outcome(
        fig3_ok && fig4_ok,
        format!(
            "first example: interval {:?} (width {:?}, grid alone {:?}); second example: tau>=psi1 {tau_psi1}, tau>=psi2 {tau_psi2}, psi1>=psi2 {psi1_psi2}, psi2>=psi1 {psi2_psi1}",
            fig3.lambda_interval,
            width(&fig3),
            width(&grid_only)
        ),
    )
}

const MARKOV_TOL: f64 = 1e-12;
const MARKOV_CASES: usize = 1000;

fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> Measure {
    let mut w: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random::<f64>() }).collect();
    if w.iter().sum::<f64>() == 0.0 {
        w[n - 1] = 1.0;
    }
    Measure::normalized(ScoreSet::range(n).unwrap(), w).unwrap()
}

/// Row cdfs are running minima of random cdfs.
fn random_monotone(rng: &mut ChaCha8Rng, n: usize) -> Transition {
    let mut cdfs: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut acc = 0.0;
            let mut c: Vec<f64> = raw
                .iter()
                .map(|w| {
                    acc += w;
                    acc / total
                })
                .collect();
            c[n - 1] = 1.0;
            c
        })
        .collect();
    for i in 1..n {
        for j in 0..n {
            cdfs[i][j] = cdfs[i][j].min(cdfs[i - 1][j]);
        }
    }
    let rows = cdfs
        .iter()
        .map(|c| (0..n).map(|j| if j == 0 { c[0] } else { (c[j] - c[j - 1]).max(0.0) }).collect())
        .collect();
    let s = ScoreSet::range(n).unwrap();
    Transition::new(s.clone(), s, rows).unwrap()
}

fn partial_sums_dominate(mu: &Measure, nu: &Measure) -> bool {
    let (mut a, mut b) = (0.0, 0.0);
    mu.weights().iter().zip(nu.weights()).all(|(x, y)| {
        a += x;
        b += y;
        a <= b + MARKOV_TOL
    })
}

fn downward_on_support(k: &Transition, mu: &Measure) -> bool {
    (0..mu.len()).filter(|&i| mu.weight(i) > 0.0).all(|i| k.row(i)[i + 1..].iter().sum::<f64>() <= MARKOV_TOL)
}

fn markov_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = [0usize; 4];
    for _ in 0..MARKOV_CASES {
        let n = rng.random_range(2..=5);
        let (mu, nu) = (random_measure(&mut rng, n), random_measure(&mut rng, n));
        let k = fq_compose(&mu, &nu).unwrap();
        if mu.push(&k).unwrap().max_abs_diff(&nu) > MARKOV_TOL || !k.is_monotone() {
            failures[0] += 1;
        }
        if partial_sums_dominate(&mu, &nu) != downward_on_support(&k, &mu) {
            failures[1] += 1;
        }
    }
    for _ in 0..MARKOV_CASES {
        let n = rng.random_range(2..=5);
        let hi = random_measure(&mut rng, n);
        let bottom = Measure::point_mass(hi.scores().clone(), 0).unwrap();
        let lo = hi.mix(&bottom, rng.random_range(0.0..1.0)).unwrap();
        let k = random_monotone(&mut rng, n);
        if !partial_sums_dominate(&hi, &lo) || !partial_sums_dominate(&hi.push(&k).unwrap(), &lo.push(&k).unwrap()) {
            failures[2] += 1;
        }
    }
    for _ in 0..MARKOV_CASES {
        let n = rng.random_range(2..=5);
        let (a, b) = (random_monotone(&mut rng, n), random_monotone(&mut rng, n));
        if !a.is_monotone() || !b.is_monotone() || !a.compose(&b).unwrap().is_monotone() {
            failures[3] += 1;
        }
    }
    outcome(
        failures.iter().all(|&f| f == 0),
        format!(
            "{MARKOV_CASES} cases each; failures: reach target {}, dominance/downward {}, monotone keeps dominance {}, closure {}",
            failures[0], failures[1], failures[2], failures[3]
        ),
    )
}

fn random_rate(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random(),
    }
}

fn conversion_segments() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cases = 500;
    let (mut agree, mut worst, mut nonempty) = (0usize, 0.0f64, 0usize);
    for _ in 0..cases {
        let nt = rng.random_range(2..=4);
        let rates: Vec<Vec<f64>> = (0..2).map(|_| (0..nt).map(|_| random_rate(&mut rng)).collect()).collect();
        let env = PassageMatrix::binary(labels("theta", nt), labels("tau", 2), rates).unwrap();
        let others: Vec<(f64, f64)> = (0..nt).map(|t| (env.pass_rate(0, t), env.pass_rate(1, t))).collect();
        let found = enumerated_segment(env.pass_rate(0, 0), env.pass_rate(1, 0), &others);
        let w = check_discerning(&env, 0, 0, 1).unwrap();
        if found.is_some() != w.holds {
            continue;
        }
        if let (Some(seg), Some((lo, hi))) = (found, w.lambda_interval) {
            nonempty += 1;
            let ends = (
                rows(&mixed_conversion(&env, 0, 0, 1, lo).unwrap()),
                rows(&mixed_conversion(&env, 0, 0, 1, hi).unwrap()),
            );
            let d = hausdorff(seg, ends);
            worst = worst.max(d);
            if d > 1e-9 {
                continue;
            }
        }
        agree += 1;
    }
    outcome(
        agree == cases,
        format!("{agree}/{cases} agree ({nonempty} nonempty), max Hausdorff distance {worst:.3e}"),
    )
}

fn beta_like() -> TypeDistribution {
    let points = linspace(0.0, 1.0, 21);
    let density = points.iter().map(|x| 6.0 * x * (1.0 - x) + 0.3).collect();
    TypeDistribution::tabulated(points, density).unwrap()
}

fn solver_closure() -> Outcome {
    let lambdas = [0.5, 1.0, 2.0];
    let cost = CostFunction::quadratic(1.0).unwrap();
    let mut worst_ic: f64 = 0.0;
    let mut sweep_failures = Vec::new();
    for (name, d) in [("uniform", TypeDistribution::uniform(0.0, 1.0).unwrap()), ("beta-like", beta_like())] {
        let mut previous: [Option<(f64, f64)>; 2] = [None, None];
        for &lambda in &lambdas {
            let kernel = PrecisionKernel::constant(0.0, 1.0, lambda).unwrap();
            let alpha = ContinuousAuthRate::exponential(0.0, 1.0, PrecisionFn::constant(lambda).unwrap()).unwrap();
            let solved = [
                solve_nonlinear_pricing(&d, &kernel, &cost, 201).unwrap(),
                solve_single_good(&d, &kernel, 201).unwrap(),
            ];
            for (slot, m) in solved.iter().enumerate() {
                let r = check_mechanism_ic(m, AuthSource::Continuous(&alpha), 1e-6).unwrap();
                worst_ic = worst_ic.max(r.ic_violation).max(r.ir_violation).max(r.shirk_violation);
                let here = (m.revenue, m.threshold.unwrap_or(f64::INFINITY));
                if let Some((rev, cut)) = previous[slot] {
                    if here.0 < rev || here.1 > cut {
                        sweep_failures.push(format!("{name} {:?} at lambda {lambda}", m.kind));
                    }
                }
                previous[slot] = Some(here);
            }
        }
    }
    outcome(
        worst_ic <= 1e-6 && sweep_failures.is_empty(),
        format!("max violation {worst_ic:.3e}, sweep failures {sweep_failures:?}"),
    )
}

fn auction_benchmark() -> Outcome {
    let uniform = TypeDistribution::uniform(0.0, 1.0).unwrap();
    let bidder = |lambda: f64| Bidder { dist: uniform.clone(), kernel: PrecisionKernel::constant(0.0, 1.0, lambda).unwrap() };
    let symmetric = solve_auction(&[bidder(0.0), bidder(0.0)], 201).unwrap();
    let error = (symmetric.revenue - 5.0 / 12.0).abs();
    let asymmetric = solve_auction(&[bidder(2.0), bidder(0.5)], 201).unwrap();
    let grid = linspace(0.0, 1.0, 201);
    let mut wins = [0usize; 2];
    for &a in &grid {
        for &b in &grid {
            if let Some(w) = asymmetric.winner(&[a, b]) {
                wins[w] += 1;
            }
        }
    }
    outcome(
        error <= 1e-3 && wins[0] > wins[1],
        format!("revenue {:.6} (error {error:.2e}); grid wins lambda 2: {}, lambda 0.5: {}", symmetric.revenue, wins[0], wins[1]),
    )
}

fn revelation_harness() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst_scf: f64 = 0.0;
    let mut shapes = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..100u64 {
        let shape = ProfileShape {
            types: shapes.random_range(1..=3),
            messages: shapes.random_range(1..=3),
            tests: shapes.random_range(1..=3),
            decisions: 2,
        };
        let p = seeded_equilibrium_profile(seed, shape).unwrap();
        let original = exhaustive_deviation_search(&p, 1e-10).incentive_compatible;
        let (c, report) = canonicalize(&p, 1e-10).unwrap();
        worst_scf = worst_scf.max(report.scf_difference);
        if !original || !c.is_canonical() || report.scf_difference > 1e-10 || !report.canonical_incentive_compatible {
            failures.push(seed);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 30.0,
        format!("100 profiles, max SCF difference {worst_scf:.2e}, failing seeds {failures:?}, {secs:.2} s"),
    )
}

/// Rates `exp(-precision * d(type, report))` for a shortest-path quasi-metric.
fn metric_rate(rng: &mut ChaCha8Rng) -> FiniteAuthRate {
    let n = rng.random_range(2..=5);
    let precision = rng.random_range(0.1..4.0);
    let mut d: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { rng.random_range(0.05..3.0) }).collect()).collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    let alpha = (0..n).map(|r| (0..n).map(|t| (-precision * d[t][r]).exp()).collect()).collect();
    FiniteAuthRate::new(labels("theta", n), alpha).unwrap()
}

/// `{0, 1}` rates whose mimicry relation is not transitive.
fn nested_range_violation(rng: &mut ChaCha8Rng) -> FiniteAuthRate {
    loop {
        let n = rng.random_range(3..=5);
        let alpha: Vec<Vec<f64>> = (0..n)
            .map(|r| (0..n).map(|t| if r == t || rng.random_bool(0.4) { 1.0 } else { 0.0 }).collect())
            .collect();
        let can = |t: usize, r: usize| alpha[r][t] == 1.0;
        let transitive = (0..n).all(|x| (0..n).all(|y| (0..n).all(|z| !(can(x, y) && can(y, z)) || can(x, z))));
        if !transitive {
            return FiniteAuthRate::new(labels("theta", n), alpha).unwrap();
        }
    }
}

fn authentication_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut round_trips = 0;
    for _ in 0..100 {
        let a = metric_rate(&mut rng);
        let ok = environment_from_alpha(&a)
            .and_then(|(env, f)| induce_alpha(&env, &f))
            .and_then(|back| essentially_equal(&back, &a))
            .unwrap_or(false);
        round_trips += ok as usize;
    }
    let mut rejected = 0;
    for _ in 0..100 {
        let a = nested_range_violation(&mut rng);
        let check = check_most_discerning_alpha(&a);
        let certified = check.certificate.as_ref().is_some_and(|c| {
            a.get(c.theta2, c.theta1) == 1.0 && a.get(c.theta3, c.theta2) == 1.0 && a.get(c.theta3, c.theta1) == 0.0
        });
        if !check.most_discerning && certified && environment_from_alpha(&a).is_err() {
            rejected += 1;
        }
    }
    outcome(
        round_trips == 100 && rejected == 100,
        format!("{round_trips}/100 round trips, {rejected}/100 violations rejected with a certificate"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("virtual values under constant precision", figure_five),
        ("Green-Laffont example with tests", green_laffont),
        ("discernment on an interval of types", examples_on_interval),
        ("Markov transition algebra", markov_suite),
        ("valid conversions form the mixing segment", conversion_segments),
        ("pricing and sale pass the IC harness", solver_closure),
        ("auction benchmark", auction_benchmark),
        ("canonical profiles", revelation_harness),
        ("authentication rate round trip", authentication_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let r = run();
        failed += !r.passed as usize;
        println!("{} {}. {name}: {}", if r.passed { "PASS" } else { "FAIL" }, i + 1, r.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
