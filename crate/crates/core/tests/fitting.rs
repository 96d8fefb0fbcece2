mod common;

use std::sync::OnceLock;

use alien_concepts::dsl::Evaluator;
use alien_concepts::fitting::{
    data_log_likelihood, fit_mcmc, response_prob, synthesize, FitConfig, FitParams, FitProblem,
    PreparedTrial, ResponseData, ResponseRow,
};
use alien_concepts::harness::{
    infer_trial, prepare_trial, sampling_grammar, SamplerSettings, Trial,
};
use alien_concepts::inference::{normalize_log_weights, predict, Hypothesis};
use proptest::prelude::*;
use statrs::distribution::{Binomial, Discrete};

const TRIALS: [&str; 4] = [
    "t01-fixed-configuration",
    "t04-shared-part-3",
    "t07-orientation-selective",
    "t10-any-pair",
];

fn sampler() -> SamplerSettings {
    SamplerSettings {
        steps: 5_000,
        ..SamplerSettings::desk()
    }
}

/// Small pools for a few trials, with the hypotheses they re-evaluate to.
fn pools() -> &'static [(&'static Trial, Vec<Hypothesis>, PreparedTrial)] {
    static POOLS: OnceLock<Vec<(&'static Trial, Vec<Hypothesis>, PreparedTrial)>> = OnceLock::new();
    POOLS.get_or_init(|| {
        TRIALS
            .iter()
            .map(|id| {
                let t = common::trial(id);
                let pool = infer_trial(t, &sampling_grammar(), &sampler(), 3).unwrap();
                let hyps = pool.hypotheses(&Evaluator::new(&t.universe)).unwrap();
                let prepared = prepare_trial(t, &pool).unwrap();
                (t, hyps, prepared)
            })
            .collect()
    })
}

fn prepared() -> Vec<PreparedTrial> {
    pools().iter().map(|(_, _, p)| p.clone()).collect()
}

/// Likelihood with every prior recomputed from the program through the grammar.
fn direct_log_likelihood(params: &FitParams, data: &ResponseData) -> f64 {
    let g = sampling_grammar().with_thetas(params.theta_orient, params.theta_config);
    let mut total = 0.0;
    for (t, hyps, _) in pools() {
        let scores: Vec<f64> = hyps
            .iter()
            .map(|h| {
                let members = t.training.iter().all(|&x| h.extension.contains(x));
                if members {
                    g.log_prior(&h.program).unwrap()
                        - t.training.len() as f64 * (h.size() as f64).ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let w = normalize_log_weights(&scores).unwrap();
        for (item, &y) in t.item_ids().iter().zip(&t.test) {
            let q = predict(hyps, &w, y);
            let p = params.alpha * q + (1.0 - params.alpha) * params.beta;
            let row = data
                .rows()
                .iter()
                .find(|r| r.trial_id == t.id() && &r.item_id == item)
                .unwrap();
            total += Binomial::new(p, row.n_total).unwrap().ln_pmf(row.n_yes);
        }
    }
    total
}

#[test]
fn rescoring_matches_full_prior_recomputation() {
    let data = synthesize(&FitParams::default(), &prepared(), 25, 1).unwrap();
    let problem = FitProblem::new(prepared(), &data).unwrap();
    for params in [
        FitParams::default(),
        FitParams {
            theta_orient: 0.3,
            theta_config: 0.2,
            alpha: 0.6,
            beta: 0.4,
        },
        FitParams {
            theta_orient: 0.95,
            theta_config: 0.9,
            alpha: 0.99,
            beta: 0.1,
        },
    ] {
        let fast = data_log_likelihood(&params, &problem);
        let slow = direct_log_likelihood(&params, &data);
        assert!((fast - slow).abs() < 1e-9, "{params:?}: {fast} vs {slow}");
    }
}

#[test]
fn flat_likelihood_leaves_base_rate_at_its_prior() {
    // One consistent hypothesis per trial makes every q exactly 0 or 1.
    let single: Vec<PreparedTrial> = pools()
        .iter()
        .map(|(t, hyps, _)| {
            let h = hyps
                .iter()
                .find(|h| t.training.iter().all(|&x| h.extension.contains(x)))
                .unwrap();
            PreparedTrial::new(
                t.id(),
                t.item_ids(),
                &t.test,
                &t.training,
                std::slice::from_ref(h),
            )
            .unwrap()
        })
        .collect();
    for p in &single {
        assert!(p.predict(0.5, 0.5).iter().all(|&q| q == 0.0 || q == 1.0));
    }
    let rows = single
        .iter()
        .flat_map(|p| {
            p.predict(0.5, 0.5)
                .into_iter()
                .zip(&p.item_ids)
                .map(|(q, item)| ResponseRow {
                    trial_id: p.trial_id.clone(),
                    item_id: item.clone(),
                    n_yes: if q == 1.0 { 20 } else { 0 },
                    n_total: 20,
                })
        })
        .collect();
    let data = ResponseData::new(rows).unwrap();
    let problem = FitProblem::new(single, &data).unwrap();
    let cfg = FitConfig {
        iters: 200_000,
        burn_in: 5_000,
        seed: 4,
        fixed_alpha: Some(1.0),
    };
    let (chain, _) = fit_mcmc(&problem, &cfg).unwrap();
    let mut betas: Vec<f64> = chain.kept().step_by(200).map(|s| s[3]).collect();
    betas.sort_by(f64::total_cmp);
    let n = betas.len() as f64;
    let ks = betas
        .iter()
        .enumerate()
        .map(|(i, &b)| (b - i as f64 / n).abs().max(((i + 1) as f64 / n - b).abs()))
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample Kolmogorov-Smirnov statistic.
    let critical = 1.628 / n.sqrt();
    assert!(
        ks < critical,
        "KS {ks:.4} over {n} draws, critical {critical:.4}"
    );
}

#[test]
fn chains_stay_inside_the_unit_box_and_repeat_by_seed() {
    let data = synthesize(&FitParams::default(), &prepared(), 25, 2).unwrap();
    let problem = FitProblem::new(prepared(), &data).unwrap();
    let cfg = FitConfig {
        iters: 5_000,
        burn_in: 500,
        seed: 9,
        fixed_alpha: None,
    };
    let (a, report) = fit_mcmc(&problem, &cfg).unwrap();
    let (b, _) = fit_mcmc(&problem, &cfg).unwrap();
    assert_eq!(a.samples, b.samples);
    assert!(a.samples.iter().flatten().all(|&v| v > 0.0 && v < 1.0));
    assert!((0.05..0.8).contains(&report.acceptance));
    for s in &report.summaries {
        assert!(s.q05 <= s.q50 && s.q50 <= s.q95);
    }
}

fn interval_widths(participants: u64) -> Vec<f64> {
    let data = synthesize(&FitParams::default(), &prepared(), participants, 5).unwrap();
    let problem = FitProblem::new(prepared(), &data).unwrap();
    let (_, report) = fit_mcmc(
        &problem,
        &FitConfig {
            iters: 30_000,
            burn_in: 3_000,
            seed: 1,
            fixed_alpha: None,
        },
    )
    .unwrap();
    report.summaries.iter().map(|s| s.q95 - s.q05).collect()
}

#[test]
fn more_participants_tighten_every_interval() {
    let narrow = interval_widths(100);
    let wide = interval_widths(50);
    for ((name, n), w) in FitParams::NAMES.iter().zip(&narrow).zip(&wide) {
        assert!(
            n < w,
            "{name}: 90% interval {n:.4} with 100 participants, {w:.4} with 50"
        );
    }
}

proptest! {
    #[test]
    fn response_probability_is_affine_and_monotone(q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0, alpha in 0.0f64..=1.0, beta in 0.0f64..=1.0) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let (a, b) = (response_prob(lo, alpha, beta).unwrap(), response_prob(hi, alpha, beta).unwrap());
        prop_assert!(a <= b + 1e-15);
        let mid = response_prob((lo + hi) / 2.0, alpha, beta).unwrap();
        prop_assert!((mid - (a + b) / 2.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
    }
}
