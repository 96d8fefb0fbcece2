//! Size-principle likelihood, posterior weights and posterior prediction.

mod exact;
mod mcmc;
mod pool;

pub use exact::{
    count_programs, enumerate_programs, exact_posterior, ExactPosterior, DEFAULT_ENUMERATION_BUDGET,
};
pub use mcmc::{mcmc_run, McmcConfig, PoolRule};
pub use pool::{ChainMeta, HypothesisSet, PoolEntry, POOL_SCHEMA_VERSION};

use std::sync::Arc;

use thiserror::Error;

use crate::dsl::{ConceptProgram, DslError, Evaluator, ExpansionCounts, Extension};
use crate::geometry::FigureId;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("figure id {0} is not in the universe")]
    UnknownFigure(FigureId),
    #[error("no training examples given")]
    NoExamples,
    #[error("no hypothesis in the pool explains the examples")]
    AllZeroWeights,
    #[error("enumeration would produce {found} programs, above the budget of {budget}")]
    EnumerationBudgetExceeded { found: u128, budget: u128 },
    #[error("invalid sampler settings: {0}")]
    BadConfig(String),
    #[error("pool file: {0}")]
    Schema(String),
    #[error(transparent)]
    Dsl(#[from] DslError),
}

pub type Result<T> = std::result::Result<T, InferenceError>;

/// A program with its prior bookkeeping and evaluated extension.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub program: ConceptProgram,
    pub counts: ExpansionCounts,
    pub extension: Arc<Extension>,
    pub visits: u64,
}

impl Hypothesis {
    pub fn size(&self) -> usize {
        self.extension.size()
    }

    pub fn log_prior(&self, theta_orient: f64, theta_config: f64) -> f64 {
        self.counts.log_prior(theta_orient, theta_config)
    }
}

fn check_examples(ev: &Evaluator, examples: &[FigureId]) -> Result<()> {
    if examples.is_empty() {
        return Err(InferenceError::NoExamples);
    }
    let n = ev.universe().len();
    match examples.iter().find(|&&x| x as usize >= n) {
        Some(&x) => Err(InferenceError::UnknownFigure(x)),
        None => Ok(()),
    }
}

/// `-k log |h|` when every example is a member, otherwise negative infinity.
pub fn log_likelihood(extension: &Extension, examples: &[FigureId]) -> f64 {
    let size = extension.size();
    if size == 0 || !examples.iter().all(|&x| extension.contains(x)) {
        return f64::NEG_INFINITY;
    }
    -(examples.len() as f64) * (size as f64).ln()
}

/// Like [`log_likelihood`], validating the examples against the universe first.
pub fn checked_log_likelihood(
    ev: &Evaluator,
    extension: &Extension,
    examples: &[FigureId],
) -> Result<f64> {
    check_examples(ev, examples)?;
    Ok(log_likelihood(extension, examples))
}

/// Normalize log scores into probabilities; scores of negative infinity get weight 0.
pub fn normalize_log_weights(scores: &[f64]) -> Result<Vec<f64>> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return Err(InferenceError::AllZeroWeights);
    }
    let unnorm: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    Ok(unnorm.into_iter().map(|w| w / total).collect())
}

/// Posterior weights over a finite pool at the given grammar parameters.
pub fn posterior_weights(
    hypotheses: &[Hypothesis],
    examples: &[FigureId],
    theta_orient: f64,
    theta_config: f64,
) -> Result<Vec<f64>> {
    if examples.is_empty() {
        return Err(InferenceError::NoExamples);
    }
    let scores: Vec<f64> = hypotheses
        .iter()
        .map(|h| {
            let ll = log_likelihood(&h.extension, examples);
            if ll == f64::NEG_INFINITY {
                ll
            } else {
                h.log_prior(theta_orient, theta_config) + ll
            }
        })
        .collect();
    normalize_log_weights(&scores)
}

/// Posterior probability that `item` belongs to the concept.
pub fn predict(hypotheses: &[Hypothesis], weights: &[f64], item: FigureId) -> f64 {
    hypotheses
        .iter()
        .zip(weights)
        .filter(|(h, _)| h.extension.contains(item))
        .map(|(_, w)| w)
        .sum::<f64>()
        .min(1.0)
}

/// [`predict`] with a bounds check on the item.
pub fn checked_predict(
    ev: &Evaluator,
    hypotheses: &[Hypothesis],
    weights: &[f64],
    item: FigureId,
) -> Result<f64> {
    if item as usize >= ev.universe().len() {
        return Err(InferenceError::UnknownFigure(item));
    }
    Ok(predict(hypotheses, weights, item))
}
