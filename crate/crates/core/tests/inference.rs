mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use alien_concepts::dsl::{parse_program, Evaluator, Extension, Grammar};
use alien_concepts::geometry::PrimId;
use alien_concepts::inference::{
    exact_posterior, mcmc_run, posterior_weights, predict, Hypothesis, McmcConfig, PoolRule,
    DEFAULT_ENUMERATION_BUDGET,
};
use proptest::prelude::*;

fn hypothesis(n: usize, members: &[u32]) -> Hypothesis {
    let program = parse_program("p1").unwrap();
    let counts = Grammar::default().expansion_counts(&program).unwrap();
    Hypothesis {
        program,
        counts,
        extension: Arc::new(Extension::from_ids(n, members.iter().copied())),
        visits: 0,
    }
}

#[test]
fn same_seed_same_pool() {
    let t = common::trial("t02-free-combination-3");
    let ev = Evaluator::new(&t.universe);
    let g = Grammar::default();
    let cfg = McmcConfig {
        steps: 3_000,
        seed: 7,
        ..McmcConfig::default()
    };
    let a = mcmc_run(&g, &ev, &t.training, &cfg).unwrap();
    let b = mcmc_run(&g, &ev, &t.training, &cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let c = mcmc_run(&g, &ev, &t.training, &McmcConfig { seed: 8, ..cfg }).unwrap();
    assert_ne!(a.to_json(), c.to_json());
}

#[test]
fn pools_hold_distinct_programs_with_positive_prior() {
    let t = common::trial("t06-repetition-3");
    let ev = Evaluator::new(&t.universe);
    let g = Grammar::default();
    for rule in [PoolRule::Proposed, PoolRule::Accepted] {
        let cfg = McmcConfig {
            steps: 2_000,
            pool_rule: rule,
            ..McmcConfig::default()
        };
        let pool = mcmc_run(&g, &ev, &t.training, &cfg).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for e in &pool.entries {
            assert!(seen.insert(e.program.clone()), "duplicate {}", e.program);
            let lp = g.log_prior(&parse_program(&e.program).unwrap()).unwrap();
            assert!(lp.is_finite());
            assert!((lp - e.counts.log_prior(g.theta_orient, g.theta_config)).abs() < 1e-9);
        }
        let hyps = pool.hypotheses(&ev).unwrap();
        assert!(hyps
            .iter()
            .zip(&pool.entries)
            .all(|(h, e)| h.size() == e.size));
    }
}

#[test]
fn chain_visits_match_exact_posterior_on_a_tiny_grammar() {
    let t = common::trial("t01-fixed-configuration");
    let ev = Evaluator::new(&t.universe);
    let g = Grammar::new(0.4, 0.6, 3).unwrap();
    let examples = [t.universe.base(PrimId(0))];
    let exact = exact_posterior(&g, &ev, &examples, DEFAULT_ENUMERATION_BUDGET).unwrap();
    let mut target: BTreeMap<String, f64> = BTreeMap::new();
    for (p, w) in exact.programs.iter().zip(&exact.weights) {
        *target.entry(p.to_string()).or_default() += w;
    }
    assert!(target.values().filter(|&&w| w > 0.01).count() >= 3);
    let cfg = McmcConfig {
        steps: 1_000_000,
        chains: 1,
        seed: 11,
        burn_in: 0.01,
        ..McmcConfig::default()
    };
    let pool = mcmc_run(&g, &ev, &examples, &cfg).unwrap();
    let total: u64 = pool.entries.iter().map(|e| e.visits).sum();
    for (program, w) in &target {
        let visits = pool
            .entries
            .iter()
            .find(|e| &e.program == program)
            .map_or(0, |e| e.visits);
        let freq = visits as f64 / total as f64;
        assert!(
            (freq - w).abs() < 0.02,
            "{program}: exact {w:.4}, chain {freq:.4}"
        );
    }
}

/// Run one long chain and compare its visit frequencies with exact enumeration.
fn visits_match_exact(trial: &str, g: Grammar, examples: &[u32], must_cover: &str, seed: u64) {
    let t = common::trial(trial);
    let ev = Evaluator::new(&t.universe);
    let exact = exact_posterior(&g, &ev, examples, DEFAULT_ENUMERATION_BUDGET).unwrap();
    let mut target: BTreeMap<String, f64> = BTreeMap::new();
    for (p, w) in exact.programs.iter().zip(&exact.weights) {
        *target.entry(p.to_string()).or_default() += w;
    }
    assert!(target
        .iter()
        .any(|(p, &w)| p.contains(must_cover) && w > 0.01));
    let cfg = McmcConfig {
        steps: 1_000_000,
        chains: 1,
        seed,
        burn_in: 0.01,
        ..McmcConfig::default()
    };
    let pool = mcmc_run(&g, &ev, examples, &cfg).unwrap();
    let total: u64 = pool.entries.iter().map(|e| e.visits).sum();
    for (program, w) in &target {
        let visits = pool
            .entries
            .iter()
            .find(|e| &e.program == program)
            .map_or(0, |e| e.visits);
        let freq = visits as f64 / total as f64;
        assert!(
            (freq - w).abs() < 0.01,
            "{program}: exact {w:.4}, chain {freq:.4}"
        );
    }
}

#[test]
fn chain_visits_match_exact_posterior_with_maps() {
    let u = &common::trial("t06-repetition-3").universe;
    visits_match_exact(
        "t06-repetition-3",
        Grammar::new(0.5, 0.5, 4).unwrap(),
        &[u.base(PrimId(1))],
        "(map",
        5,
    );
}

#[test]
fn chain_visits_match_exact_posterior_with_configurations() {
    let t = common::trial("t06-repetition-3");
    visits_match_exact(
        "t06-repetition-3",
        Grammar::new(0.5, 0.5, 5).unwrap(),
        &t.training[..1],
        "(attach*",
        6,
    );
}

#[test]
fn exact_weights_are_normalized() {
    let t = common::trial("t04-shared-part-3");
    let ev = Evaluator::new(&t.universe);
    let g = Grammar::new(0.9, 0.725, 4).unwrap();
    let exact = exact_posterior(&g, &ev, &t.training, DEFAULT_ENUMERATION_BUDGET).unwrap();
    assert!((exact.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for &x in &t.training {
        assert!((exact.predict(x) - 1.0).abs() < 1e-9);
    }
}

fn members(n: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::btree_set(0..n as u32, 1..n).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn smaller_consistent_hypothesis_gets_more_weight(small in members(20), extra in members(20), k in 1usize..4) {
        let mut big = small.clone();
        big.extend(extra.iter().filter(|x| !small.contains(x)));
        big.sort();
        prop_assume!(big.len() > small.len());
        let examples: Vec<u32> = small.iter().cycle().take(k).copied().collect();
        let hs = [hypothesis(20, &small), hypothesis(20, &big)];
        let w = posterior_weights(&hs, &examples, 0.7, 0.4).unwrap();
        prop_assert!(w[0] > w[1]);
        let expected = (big.len() as f64 / small.len() as f64).powi(k as i32);
        prop_assert!((w[0] / w[1] - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn consistent_examples_never_lower_relative_weight(a in members(16), b in members(16), x in 0u32..8, y in 8u32..16) {
        let mut a = a;
        a.extend([x, y]);
        a.sort();
        a.dedup();
        let mut b: Vec<u32> = b.into_iter().filter(|&m| m != y).collect();
        b.push(x);
        b.sort();
        b.dedup();
        let hs = [hypothesis(16, &a), hypothesis(16, &b), hypothesis(16, &(0..16).collect::<Vec<_>>())];
        let before = posterior_weights(&hs, &[x], 0.5, 0.5).unwrap();
        let after = posterior_weights(&hs, &[x, y], 0.5, 0.5).unwrap();
        prop_assert_eq!(after[1], 0.0);
        prop_assert!(after[0] / after[2] >= before[0] / before[2]);
    }

    #[test]
    fn prediction_is_monotone_under_membership_dominance(sets in prop::collection::vec(members(12), 1..8), raw in prop::collection::vec(0.01f64..1.0, 8)) {
        let hs: Vec<Hypothesis> = sets.iter().map(|s| hypothesis(12, s)).collect();
        let total: f64 = raw[..hs.len()].iter().sum();
        let w: Vec<f64> = raw[..hs.len()].iter().map(|v| v / total).collect();
        for y1 in 0..12u32 {
            for y2 in 0..12u32 {
                let dominates = hs.iter().all(|h| h.extension.contains(y1) || !h.extension.contains(y2));
                if dominates {
                    prop_assert!(predict(&hs, &w, y1) >= predict(&hs, &w, y2) - 1e-12);
                }
            }
        }
    }
}
