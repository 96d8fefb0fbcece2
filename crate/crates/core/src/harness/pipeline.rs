//! Per-trial inference, model predictions and cross-trial fitting.

use std::path::{Path, PathBuf};

use crate::baselines::{
    encode_string, gcm_similarity, levenshtein, BaselineError, FeatureTable, GcmParams,
};
use crate::dsl::{Evaluator, Grammar};
use crate::fitting::{
    binomial_log_pmf, fit_mcmc, match_observations, metropolis_hastings, FitConfig, FitParams,
    FitProblem, FitReport, MhChain, MhConfig, PreparedTrial, ResponseData, Transform,
};
use crate::geometry::{FigureId, Universe};
use crate::inference::{mcmc_run, HypothesisSet};

use super::config::{GcmSettings, SamplerSettings};
use super::report::{
    ItemPrediction, ModelKind, PredictionReport, TrialPrediction, REPORT_SCHEMA_VERSION,
};
use super::trial::Trial;
use super::HarnessError;

/// Parameters fitted for the string GCM; the parts weight stays at 1 to fix the scale.
pub const GCM_FIT_NAMES: [&str; 5] = ["w_config", "w_orient", "w_scale", "alpha", "beta"];

/// Range of the log-uniform prior on fitted GCM weights.
const GCM_WEIGHT_RANGE: (f64, f64) = (6.737_946_999_085_467e-3, 148.413_159_102_576_6);

/// Seed for one trial's sampler, derived from the run seed and the trial id.
///
/// Independent of the order trials are processed in.
pub fn trial_seed(seed: u64, trial_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in trial_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Sample a hypothesis pool for the trial's training examples.
pub fn infer_trial(
    trial: &Trial,
    grammar: &Grammar,
    sampler: &SamplerSettings,
    seed: u64,
) -> Result<HypothesisSet, HarnessError> {
    let ev = Evaluator::new(&trial.universe);
    let cfg = sampler.with_seed(trial_seed(seed, trial.id()));
    let mut pool = mcmc_run(grammar, &ev, &trial.training, &cfg)?;
    pool.trial_id = Some(trial.id().to_string());
    Ok(pool)
}

/// Where a trial's pool lives inside a pool directory.
pub fn pool_path(dir: &Path, trial_id: &str) -> PathBuf {
    dir.join(format!("{trial_id}.json"))
}

/// Load the pool written for `trial` by a previous inference run.
pub fn load_pool(dir: &Path, trial: &Trial) -> Result<HypothesisSet, HarnessError> {
    let path = pool_path(dir, trial.id());
    if !path.exists() {
        return Err(HarnessError::MissingPool(trial.id().to_string()));
    }
    Ok(HypothesisSet::load(&path)?)
}

/// Re-evaluate a pool against the trial and collapse it for re-scoring.
pub fn prepare_trial(trial: &Trial, pool: &HypothesisSet) -> Result<PreparedTrial, HarnessError> {
    if let Some(id) = &pool.trial_id {
        if id != trial.id() {
            return Err(HarnessError::MissingPool(trial.id().to_string()));
        }
    }
    let ev = Evaluator::new(&trial.universe);
    let hyps = pool.hypotheses(&ev)?;
    Ok(PreparedTrial::new(
        trial.id(),
        trial.item_ids(),
        &trial.test,
        &trial.training,
        &hyps,
    )?)
}

fn assemble(trial: &Trial, qs: Vec<f64>, alpha: f64, beta: f64) -> TrialPrediction {
    let items = trial
        .spec
        .test
        .iter()
        .zip(qs)
        .map(|(t, q)| {
            let q = q.clamp(0.0, 1.0);
            ItemPrediction {
                item_id: t.id.clone(),
                tag: t.tag,
                q,
                response_prob: alpha * q + (1.0 - alpha) * beta,
            }
        })
        .collect();
    TrialPrediction {
        trial_id: trial.id().to_string(),
        items,
    }
}

pub fn bayesian_prediction(
    trial: &Trial,
    prepared: &PreparedTrial,
    params: &FitParams,
) -> TrialPrediction {
    let qs = prepared.predict(params.theta_orient, params.theta_config);
    assemble(trial, qs, params.alpha, params.beta)
}

/// Substring edit distances (parts, config, orient) from every test item to every example.
fn string_distances(trial: &Trial) -> Result<Vec<Vec<[f64; 3]>>, BaselineError> {
    let u = &trial.universe;
    let examples = trial
        .training
        .iter()
        .map(|&x| encode_string(u, x))
        .collect::<Result<Vec<_>, _>>()?;
    trial
        .test
        .iter()
        .map(|&y| {
            let e = encode_string(u, y)?;
            Ok(examples
                .iter()
                .map(|x| {
                    [
                        levenshtein(&e.parts, &x.parts) as f64,
                        levenshtein(&e.config, &x.config) as f64,
                        levenshtein(&e.orient, &x.orient) as f64,
                    ]
                })
                .collect())
        })
        .collect()
}

fn combine(d: &[f64; 3], g: &GcmParams) -> f64 {
    (g.w_parts * d[0] + g.w_config * d[1] + g.w_orient * d[2])
        / (g.w_parts + g.w_config + g.w_orient)
}

fn string_q_from(distances: &[Vec<[f64; 3]>], g: &GcmParams) -> Vec<f64> {
    distances
        .iter()
        .map(|row| {
            let d: Vec<f64> = row.iter().map(|d| combine(d, g)).collect();
            gcm_similarity(&d, g.w_scale)
        })
        .collect()
}

/// String-GCM similarity of every test item to the training examples.
pub fn string_gcm_q(trial: &Trial, weights: &GcmParams) -> Result<Vec<f64>, HarnessError> {
    weights.validate()?;
    Ok(string_q_from(&string_distances(trial)?, weights))
}

pub fn string_gcm_prediction(
    trial: &Trial,
    gcm: &GcmSettings,
) -> Result<TrialPrediction, HarnessError> {
    let qs = string_gcm_q(trial, &gcm.weights)?;
    Ok(assemble(trial, qs, gcm.alpha, gcm.beta))
}

/// Key naming a figure in feature files: its canonical cells as `x,y,HALF` joined by `;`.
///
/// Shapes are canonical, so the key is the same in every trial that contains the figure.
pub fn shape_key(u: &Universe, id: FigureId) -> String {
    u.figure(id)
        .figure
        .shape
        .cells()
        .iter()
        .map(|c| format!("{},{},{}", c.x, c.y, c.half))
        .collect::<Vec<_>>()
        .join(";")
}

/// Feature-GCM prediction using cosine distances between precomputed feature vectors.
pub fn feature_gcm_prediction(
    trial: &Trial,
    features: &FeatureTable,
    gcm: &GcmSettings,
) -> Result<TrialPrediction, HarnessError> {
    gcm.weights.validate()?;
    let u = &trial.universe;
    let examples: Vec<String> = trial.training.iter().map(|&x| shape_key(u, x)).collect();
    let qs = trial
        .test
        .iter()
        .map(|&y| {
            let key = shape_key(u, y);
            let d = examples
                .iter()
                .map(|x| features.distance(&key, x))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(gcm_similarity(&d, gcm.weights.w_scale))
        })
        .collect::<Result<Vec<_>, BaselineError>>()?;
    Ok(assemble(trial, qs, gcm.alpha, gcm.beta))
}

pub fn bayesian_report(
    trials: &[Trial],
    prepared: &[PreparedTrial],
    params: &FitParams,
) -> PredictionReport {
    PredictionReport {
        schema_version: REPORT_SCHEMA_VERSION,
        model: ModelKind::Bayesian,
        params: serde_json::to_value(params).expect("params serialize"),
        trials: trials
            .iter()
            .zip(prepared)
            .map(|(t, p)| bayesian_prediction(t, p, params))
            .collect(),
    }
}

/// String-GCM report, or feature-GCM when a feature table is given.
pub fn gcm_report(
    trials: &[Trial],
    features: Option<&FeatureTable>,
    gcm: &GcmSettings,
) -> Result<PredictionReport, HarnessError> {
    let (model, preds) = match features {
        Some(f) => (
            ModelKind::FeatureGcm,
            trials
                .iter()
                .map(|t| feature_gcm_prediction(t, f, gcm))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => (
            ModelKind::StringGcm,
            trials
                .iter()
                .map(|t| string_gcm_prediction(t, gcm))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    Ok(PredictionReport {
        schema_version: REPORT_SCHEMA_VERSION,
        model,
        params: serde_json::to_value(gcm).expect("params serialize"),
        trials: preds,
    })
}

/// Fit grammar and response parameters to responses across trials.
pub fn fit_bayesian(
    prepared: Vec<PreparedTrial>,
    data: &ResponseData,
    cfg: &FitConfig,
) -> Result<(MhChain, FitReport), HarnessError> {
    let problem = FitProblem::new(prepared, data)?;
    Ok(fit_mcmc(&problem, cfg)?)
}

/// Fit string-GCM weights and the lapse layer by the same binomial likelihood.
pub fn fit_string_gcm(
    trials: &[Trial],
    data: &ResponseData,
    cfg: &FitConfig,
) -> Result<(MhChain, FitReport), HarnessError> {
    let item_ids: Vec<Vec<String>> = trials.iter().map(Trial::item_ids).collect();
    let layout: Vec<(&str, &[String])> = trials
        .iter()
        .zip(&item_ids)
        .map(|(t, ids)| (t.id(), &ids[..]))
        .collect();
    let observations = match_observations(&layout, data)?;
    let distances = trials
        .iter()
        .map(string_distances)
        .collect::<Result<Vec<_>, _>>()?;
    let (lo, hi) = GCM_WEIGHT_RANGE;
    let weight = Transform::LogBounded { lo, hi };
    let mut transforms = vec![weight, weight, weight, Transform::Logit, Transform::Logit];
    let mut initial = vec![1.0, 1.0, 1.0, 0.5, 0.5];
    if let Some(a) = cfg.fixed_alpha {
        transforms[3] = Transform::Fixed;
        initial[3] = a;
    }
    let mh = MhConfig {
        iters: cfg.iters,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
        initial,
        transforms,
    };
    let chain = metropolis_hastings(&mh, |v| {
        let g = GcmParams {
            w_parts: 1.0,
            w_config: v[0],
            w_orient: v[1],
            w_scale: v[2],
        };
        let (alpha, beta) = (v[3], v[4]);
        let mut total = 0.0;
        for (dist, obs) in distances.iter().zip(&observations) {
            let qs = string_q_from(dist, &g);
            for o in obs {
                let p = alpha * qs[o.item] + (1.0 - alpha) * beta;
                total += binomial_log_pmf(o.n_yes, o.n_total, p);
            }
        }
        total
    });
    let report = FitReport::from_chain(&GCM_FIT_NAMES, &chain, cfg.seed);
    Ok((chain, report))
}
