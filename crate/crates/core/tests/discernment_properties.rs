use proptest::prelude::*;
use veritest_core::discernment::{
    check_discerning, check_discerning_lp, check_equivalent, lp_lambda_interval, mixed_conversion, PassageMatrix,
};
use veritest_core::markov::{Measure, ScoreSet, Transition};

mod common;
use common::{enumerated_segment, hausdorff, rows};

const WITNESS: f64 = 1e-10;

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn rate() -> impl Strategy<Value = f64> {
    prop_oneof![8 => 0.0..=1.0f64, 1 => Just(0.0), 1 => Just(1.0)]
}

/// Pass/fail environment with 2 to 4 types and 2 or 3 tests.
fn binary_env() -> impl Strategy<Value = PassageMatrix> {
    (2usize..=4, 2usize..=3).prop_flat_map(|(nt, nk)| {
        prop::collection::vec(prop::collection::vec(rate(), nt), nk)
            .prop_map(move |rates| PassageMatrix::binary(labels("theta", nt), labels("tau", nk), rates).unwrap())
    })
}

/// Environment on three ordered scores.
fn graded_env() -> impl Strategy<Value = PassageMatrix> {
    (2usize..=3, 2usize..=3).prop_flat_map(|(nt, nk)| {
        prop::collection::vec(prop::collection::vec(prop::collection::vec(0.0..1.0f64, 3), nt), nk).prop_map(move |raw| {
            let s = ScoreSet::range(3).unwrap();
            let dists = raw
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|mut w| {
                            if w.iter().sum::<f64>() == 0.0 {
                                w[0] = 1.0;
                            }
                            Measure::normalized(s.clone(), w).unwrap()
                        })
                        .collect()
                })
                .collect();
            PassageMatrix::new(labels("theta", nt), labels("tau", nk), dists).unwrap()
        })
    })
}

fn cdf(w: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    w.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

/// The conversion conditions checked from scratch: monotone rows,
/// reproduction at `theta`, no type raised above its target distribution.
fn witness_error(env: &PassageMatrix, theta: usize, tau: usize, psi: usize, k: &Transition) -> f64 {
    let n = env.scores().len();
    let mut worst: f64 = 0.0;
    for i in 1..n {
        for (hi, lo) in cdf(k.row(i)).iter().zip(cdf(k.row(i - 1))) {
            worst = worst.max(hi - lo);
        }
    }
    let image = |t: usize| -> Vec<f64> {
        let from = env.dist(tau, t).weights();
        (0..n).map(|j| (0..n).map(|i| from[i] * k.prob(i, j)).sum()).collect()
    };
    let own = image(theta);
    for (a, b) in own.iter().zip(env.dist(psi, theta).weights()) {
        worst = worst.max((a - b).abs());
    }
    for t in 0..env.num_types() {
        for (have, want) in cdf(&image(t)).iter().zip(cdf(env.dist(psi, t).weights())) {
            worst = worst.max(want - have);
        }
    }
    worst
}

fn rates(env: &PassageMatrix) -> Vec<Vec<f64>> {
    (0..env.num_tests()).map(|k| (0..env.num_types()).map(|t| env.pass_rate(k, t)).collect()).collect()
}

fn triples(env: &PassageMatrix) -> Vec<(usize, usize, usize)> {
    let (nt, nk) = (env.num_types(), env.num_tests());
    (0..nt).flat_map(|a| (0..nk).flat_map(move |b| (0..nk).map(move |c| (a, b, c)))).collect()
}

// a nearly degenerate pair of rows once drove the simplex to a negative basis
#[test]
fn near_duplicate_rows_keep_witnesses_valid() {
    let scores = ScoreSet::range(3).unwrap();
    let m = |w: Vec<f64>| Measure::new(scores.clone(), w).unwrap();
    let dists = vec![
        vec![
            m(vec![0.22595031322800865, 0.38971685392229855, 0.3843328328496928]),
            m(vec![0.20517707266683377, 0.4001764745868112, 0.39464645274635507]),
        ],
        vec![m(vec![1.0, 0.0, 0.0]), m(vec![1.0, 0.0, 0.0])],
        vec![m(vec![1.0, 0.0, 0.0]), m(vec![1.0, 0.0, 0.0])],
    ];
    let env = PassageMatrix::new(labels("theta", 2), labels("tau", 3), dists).unwrap();
    for (theta, tau, psi) in triples(&env) {
        let w = check_discerning(&env, theta, tau, psi).unwrap();
        if let Some(k) = &w.conversion {
            assert!(witness_error(&env, theta, tau, psi, k) <= WITNESS, "{theta} {tau} {psi}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn closed_form_and_linear_program_agree(env in binary_env()) {
        for (th, a, b) in triples(&env) {
            let w = check_discerning(&env, th, a, b).unwrap();
            let lp = check_discerning_lp(&env, th, a, b).unwrap();
            prop_assert_eq!(w.holds, lp.holds, "{:?}", (th, a, b));
            if let Some((lo, hi)) = w.lambda_interval {
                let (l2, h2) = lp_lambda_interval(&env, th, a, b).unwrap().unwrap();
                prop_assert!((lo - l2).abs() <= 1e-9 && (hi - h2).abs() <= 1e-9, "{:?} vs {:?} at {:?} in {:?}", (lo, hi), (l2, h2), (th, a, b), rates(&env));
            }
        }
    }

    #[test]
    fn witnesses_satisfy_the_definition(env in binary_env()) {
        for (th, a, b) in triples(&env) {
            let w = check_discerning(&env, th, a, b).unwrap();
            if let Some(k) = &w.conversion {
                prop_assert!(k.is_monotone());
                prop_assert!(witness_error(&env, th, a, b, k) <= WITNESS);
            }
            if let Some(k) = check_discerning_lp(&env, th, a, b).unwrap().conversion {
                prop_assert!(witness_error(&env, th, a, b, &k) <= WITNESS);
            }
        }
    }

    #[test]
    fn graded_witnesses_satisfy_the_definition(env in graded_env()) {
        for (th, a, b) in triples(&env) {
            let w = check_discerning(&env, th, a, b).unwrap();
            if a == b {
                prop_assert!(w.holds);
            }
            if let Some(k) = &w.conversion {
                prop_assert!(witness_error(&env, th, a, b, k) <= WITNESS);
            }
        }
    }

    #[test]
    fn reflexive_and_transitive(env in binary_env()) {
        let nk = env.num_tests();
        for th in 0..env.num_types() {
            for a in 0..nk {
                prop_assert!(check_discerning(&env, th, a, a).unwrap().holds);
                for b in 0..nk {
                    let Some(k1) = check_discerning(&env, th, a, b).unwrap().conversion else { continue };
                    for c in 0..nk {
                        let Some(k2) = check_discerning(&env, th, b, c).unwrap().conversion else { continue };
                        let k = k1.compose(&k2).unwrap();
                        prop_assert!(witness_error(&env, th, a, c, &k) <= WITNESS);
                        prop_assert!(check_discerning(&env, th, a, c).unwrap().holds, "{:?}", (th, a, b, c));
                    }
                }
            }
        }
    }

    #[test]
    fn easiest_test_for_theta_admits_full_weight(env in binary_env()) {
        for (th, a, b) in triples(&env) {
            let top = (0..env.num_types()).all(|t| env.pass_rate(a, th) >= env.pass_rate(a, t));
            if !top {
                continue;
            }
            let w = check_discerning(&env, th, a, b).unwrap();
            if let Some((_, hi)) = w.lambda_interval {
                prop_assert!(hi >= 1.0 - 1e-12, "{:?}", w.lambda_interval);
            }
        }
    }

    #[test]
    fn equivalence_matches_both_directions(env in binary_env()) {
        for (th, a, b) in triples(&env) {
            let both = check_discerning(&env, th, a, b).unwrap().holds && check_discerning(&env, th, b, a).unwrap().holds;
            prop_assert_eq!(check_equivalent(&env, th, a, b).unwrap(), both, "{:?}", (th, a, b));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn valid_conversions_form_the_mixing_segment(env in binary_env()) {
        let (th, a, b) = (0, 0, 1);
        let (p_tau, p_psi) = (env.pass_rate(a, th), env.pass_rate(b, th));
        let others: Vec<(f64, f64)> =
            (0..env.num_types()).map(|t| (env.pass_rate(a, t), env.pass_rate(b, t))).collect();
        let found = enumerated_segment(p_tau, p_psi, &others);
        let w = check_discerning(&env, th, a, b).unwrap();
        prop_assert_eq!(found.is_some(), w.holds);
        if let (Some(seg), Some((lo, hi))) = (found, w.lambda_interval) {
            let ends = (
                rows(&mixed_conversion(&env, th, a, b, lo).unwrap()),
                rows(&mixed_conversion(&env, th, a, b, hi).unwrap()),
            );
            prop_assert!(hausdorff(seg, ends) <= 1e-9, "{:?} vs {:?}", seg, ends);
        }
    }
}
