//! Response model and parameter estimation from aggregated yes/no counts.

mod mh;
mod prepared;
mod responses;

pub use mh::{metropolis_hastings, MhChain, MhConfig, Transform};
pub use prepared::{Group, PreparedTrial};
pub use responses::{ResponseData, ResponseRow};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("no hypothesis pool for trial {0:?}")]
    MissingPool(String),
    #[error("no response data for trial {0:?}")]
    MissingData(String),
    #[error("trial {trial:?} has no test item {item:?}")]
    UnknownItem { trial: String, item: String },
    #[error("no trials to fit")]
    DegenerateData,
    #[error("response file: {0}")]
    Format(String),
    #[error(transparent)]
    Inference(#[from] crate::inference::InferenceError),
}

pub type Result<T> = std::result::Result<T, FitError>;

/// Grammar and response parameters fitted to data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitParams {
    pub theta_orient: f64,
    pub theta_config: f64,
    /// One minus the lapse rate.
    pub alpha: f64,
    /// Probability of answering yes on a lapse.
    pub beta: f64,
}

impl Default for FitParams {
    /// The published group-level estimates.
    fn default() -> Self {
        FitParams {
            theta_orient: 0.999,
            theta_config: 0.725,
            alpha: 0.839,
            beta: 0.714,
        }
    }
}

impl FitParams {
    pub const NAMES: [&'static str; 4] = ["theta_orient", "theta_config", "alpha", "beta"];

    pub fn to_array(self) -> [f64; 4] {
        [self.theta_orient, self.theta_config, self.alpha, self.beta]
    }

    pub fn from_slice(v: &[f64]) -> FitParams {
        FitParams {
            theta_orient: v[0],
            theta_config: v[1],
            alpha: v[2],
            beta: v[3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in FitParams::NAMES.iter().zip(self.to_array()) {
            if !(v > 0.0 && v < 1.0) {
                return Err(FitError::OutOfRange(format!(
                    "{name} = {v} must lie in (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Lapse mixture: follow the model with probability `alpha`, otherwise say yes with probability `beta`.
pub fn response_prob(q: f64, alpha: f64, beta: f64) -> Result<f64> {
    for (name, v) in [("q", q), ("alpha", alpha), ("beta", beta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(FitError::OutOfRange(format!("{name} = {v} outside [0, 1]")));
        }
    }
    Ok(alpha * q + (1.0 - alpha) * beta)
}

/// Binomial log-probability of `k` successes in `n` trials, with `0 log 0 = 0`.
pub fn binomial_log_pmf(k: u64, n: u64, p: f64) -> f64 {
    let term = |count: u64, prob: f64| {
        if count == 0 {
            0.0
        } else {
            count as f64 * prob.ln()
        }
    };
    ln_binomial(n, k) + term(k, p) + term(n - k, 1.0 - p)
}

/// One observed item: index into the trial's test list and its counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub item: usize,
    pub n_yes: u64,
    pub n_total: u64,
}

/// Trials paired with their observations, ready for repeated likelihood evaluation.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub trials: Vec<PreparedTrial>,
    pub observations: Vec<Vec<Observation>>,
}

impl FitProblem {
    pub fn new(trials: Vec<PreparedTrial>, data: &ResponseData) -> Result<FitProblem> {
        let layout: Vec<(&str, &[String])> = trials
            .iter()
            .map(|t| (t.trial_id.as_str(), &t.item_ids[..]))
            .collect();
        let observations = match_observations(&layout, data)?;
        Ok(FitProblem {
            trials,
            observations,
        })
    }

    /// Binomial log-likelihood of all observations given per-item response probabilities.
    pub fn log_likelihood_with(&self, mut item_probs: impl FnMut(usize) -> Vec<f64>) -> f64 {
        let mut total = 0.0;
        for (t, obs) in self.observations.iter().enumerate() {
            let probs = item_probs(t);
            for o in obs {
                total += binomial_log_pmf(o.n_yes, o.n_total, probs[o.item]);
            }
        }
        total
    }
}

/// Map response rows onto `(trial id, item ids)` layouts. Every trial needs at least one row.
pub fn match_observations(
    layout: &[(&str, &[String])],
    data: &ResponseData,
) -> Result<Vec<Vec<Observation>>> {
    if layout.is_empty() {
        return Err(FitError::DegenerateData);
    }
    let mut observations = vec![Vec::new(); layout.len()];
    for row in data.rows() {
        let t = layout
            .iter()
            .position(|(id, _)| *id == row.trial_id)
            .ok_or_else(|| FitError::MissingPool(row.trial_id.clone()))?;
        let item = layout[t]
            .1
            .iter()
            .position(|i| *i == row.item_id)
            .ok_or_else(|| FitError::UnknownItem {
                trial: row.trial_id.clone(),
                item: row.item_id.clone(),
            })?;
        observations[t].push(Observation {
            item,
            n_yes: row.n_yes,
            n_total: row.n_total,
        });
    }
    if let Some(t) = observations.iter().position(Vec::is_empty) {
        return Err(FitError::MissingData(layout[t].0.to_string()));
    }
    Ok(observations)
}

/// Log-likelihood of the data under the Bayesian model, re-scoring each pool at the given parameters.
pub fn data_log_likelihood(params: &FitParams, problem: &FitProblem) -> f64 {
    problem.log_likelihood_with(|t| {
        problem.trials[t]
            .predict(params.theta_orient, params.theta_config)
            .into_iter()
            .map(|q| params.alpha * q + (1.0 - params.alpha) * params.beta)
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub iters: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Keep alpha at this value instead of fitting it.
    pub fixed_alpha: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            iters: 50_000,
            burn_in: 5_000,
            seed: 0,
            fixed_alpha: None,
        }
    }
}

/// Summary of one fitted parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub map: f64,
    pub mean: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub names: Vec<String>,
    pub map: Vec<f64>,
    pub map_log_likelihood: f64,
    pub summaries: Vec<ParamSummary>,
    pub acceptance: f64,
    pub iters: usize,
    pub burn_in: usize,
    pub seed: u64,
}

pub const FIT_SCHEMA_VERSION: u32 = 1;

impl FitReport {
    pub fn from_chain(names: &[&str], chain: &MhChain, cfg_seed: u64) -> FitReport {
        let summaries = (0..names.len())
            .map(|j| {
                let mut v: Vec<f64> = chain.kept().map(|s| s[j]).collect();
                v.sort_by(f64::total_cmp);
                let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
                ParamSummary {
                    map: chain.map[j],
                    mean: v.iter().sum::<f64>() / v.len() as f64,
                    q05: q(0.05),
                    q50: q(0.5),
                    q95: q(0.95),
                }
            })
            .collect();
        FitReport {
            schema_version: FIT_SCHEMA_VERSION,
            names: names.iter().map(|s| s.to_string()).collect(),
            map: chain.map.clone(),
            map_log_likelihood: chain.map_log_target,
            summaries,
            acceptance: chain.acceptance,
            iters: chain.samples.len(),
            burn_in: chain.burn_in,
            seed: cfg_seed,
        }
    }

    pub fn fit_params(&self) -> Option<FitParams> {
        (self.names.iter().map(String::as_str).eq(FitParams::NAMES))
            .then(|| FitParams::from_slice(&self.map))
    }
}

/// Fit grammar and response parameters by Metropolis-Hastings under uniform priors.
pub fn fit_mcmc(problem: &FitProblem, cfg: &FitConfig) -> Result<(MhChain, FitReport)> {
    if problem.trials.is_empty() {
        return Err(FitError::DegenerateData);
    }
    let mut transforms = vec![Transform::Logit; 4];
    let mut initial = vec![0.5; 4];
    if let Some(a) = cfg.fixed_alpha {
        transforms[2] = Transform::Fixed;
        initial[2] = a;
    }
    let mh = MhConfig {
        iters: cfg.iters,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
        initial,
        transforms,
    };
    let chain = metropolis_hastings(&mh, |v| {
        data_log_likelihood(&FitParams::from_slice(v), problem)
    });
    let report = FitReport::from_chain(&FitParams::NAMES, &chain, cfg.seed);
    Ok((chain, report))
}

/// Simulate yes counts from `participants` learners answering every test item.
pub fn synthesize(
    params: &FitParams,
    trials: &[PreparedTrial],
    participants: u64,
    seed: u64,
) -> Result<ResponseData> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for t in trials {
        for (item, q) in t
            .item_ids
            .iter()
            .zip(t.predict(params.theta_orient, params.theta_config))
        {
            let p = response_prob(q.clamp(0.0, 1.0), params.alpha, params.beta)?;
            let n_yes = Binomial::new(participants, p)
                .map_err(|e| FitError::OutOfRange(e.to_string()))?
                .sample(&mut rng);
            rows.push(ResponseRow {
                trial_id: t.trial_id.clone(),
                item_id: item.clone(),
                n_yes,
                n_total: participants,
            });
        }
    }
    ResponseData::new(rows)
}
