//! Random-walk Metropolis-Hastings on an unconstrained scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// How a parameter maps onto the real line where the walk happens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    /// A probability with a uniform prior; walks on log-odds.
    Logit,
    /// A positive weight with a log-uniform prior on `[lo, hi]`; walks on the log.
    LogBounded { lo: f64, hi: f64 },
    /// Held at its initial value.
    Fixed,
}

impl Transform {
    fn to_free(self, v: f64) -> f64 {
        match self {
            Transform::Logit => (v / (1.0 - v)).ln(),
            Transform::LogBounded { .. } => v.ln(),
            Transform::Fixed => v,
        }
    }

    fn from_free(self, z: f64) -> f64 {
        match self {
            Transform::Logit => 1.0 / (1.0 + (-z).exp()),
            Transform::LogBounded { .. } => z.exp(),
            Transform::Fixed => z,
        }
    }

    /// Log prior density of the free coordinate (up to a constant).
    fn log_prior_free(self, z: f64) -> f64 {
        match self {
            Transform::Logit => {
                // Uniform on (0, 1) pushed through the logit: density v (1 - v).
                let v = self.from_free(z);
                if v <= 0.0 || v >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    v.ln() + (1.0 - v).ln()
                }
            }
            Transform::LogBounded { lo, hi } => {
                if z >= lo.ln() && z <= hi.ln() {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Transform::Fixed => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    pub iters: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub initial: Vec<f64>,
    pub transforms: Vec<Transform>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhChain {
    /// Every state in natural units, one per iteration.
    pub samples: Vec<Vec<f64>>,
    /// Log-likelihood of each state.
    pub log_targets: Vec<f64>,
    /// Post-burn-in acceptance rate.
    pub acceptance: f64,
    pub burn_in: usize,
    /// Highest-likelihood state visited.
    pub map: Vec<f64>,
    pub map_log_target: f64,
    /// Final proposal scale on the free coordinates.
    pub step: f64,
}

impl MhChain {
    pub fn kept(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.samples[self.burn_in.min(self.samples.len().saturating_sub(1))..].iter()
    }
}

const TARGET_LOW: f64 = 0.2;
const TARGET_HIGH: f64 = 0.4;
const TUNE_EVERY: usize = 100;

/// Sample a posterior proportional to `exp(log_lik)` times the transforms' priors.
///
/// The proposal scale adapts during burn-in to keep acceptance in the 20-40% band
/// and is frozen afterwards.
pub fn metropolis_hastings(cfg: &MhConfig, mut log_lik: impl FnMut(&[f64]) -> f64) -> MhChain {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dims = cfg.initial.len();
    let natural = |z: &[f64]| -> Vec<f64> {
        z.iter()
            .zip(&cfg.transforms)
            .map(|(&z, t)| t.from_free(z))
            .collect()
    };
    let log_prior = |z: &[f64]| -> f64 {
        z.iter()
            .zip(&cfg.transforms)
            .map(|(&z, t)| t.log_prior_free(z))
            .sum()
    };

    let mut z: Vec<f64> = cfg
        .initial
        .iter()
        .zip(&cfg.transforms)
        .map(|(&v, t)| t.to_free(v))
        .collect();
    let mut x = natural(&z);
    let mut ll = log_lik(&x);
    let mut lp = log_prior(&z);
    let mut step = 0.5;
    let (mut window_acc, mut kept_acc) = (0usize, 0usize);
    let mut chain = MhChain {
        samples: Vec::with_capacity(cfg.iters),
        log_targets: Vec::with_capacity(cfg.iters),
        acceptance: 0.0,
        burn_in: cfg.burn_in.min(cfg.iters),
        map: x.clone(),
        map_log_target: ll,
        step,
    };
    for it in 0..cfg.iters {
        let mut zp = z.clone();
        for j in 0..dims {
            if cfg.transforms[j] != Transform::Fixed {
                zp[j] += step * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let lpp = log_prior(&zp);
        let accepted = if lpp.is_finite() {
            let xp = natural(&zp);
            let llp = log_lik(&xp);
            let log_ratio = llp + lpp - ll - lp;
            let take =
                llp.is_finite() && (log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio);
            if take {
                (z, x, ll, lp) = (zp, xp, llp, lpp);
            }
            take
        } else {
            false
        };
        if ll > chain.map_log_target {
            chain.map = x.clone();
            chain.map_log_target = ll;
        }
        if it < cfg.burn_in {
            window_acc += accepted as usize;
            if (it + 1) % TUNE_EVERY == 0 {
                let rate = window_acc as f64 / TUNE_EVERY as f64;
                if rate < TARGET_LOW {
                    step *= 0.7;
                } else if rate > TARGET_HIGH {
                    step *= 1.4;
                }
                window_acc = 0;
            }
        } else {
            kept_acc += accepted as usize;
        }
        chain.samples.push(x.clone());
        chain.log_targets.push(ll);
    }
    let kept = cfg.iters.saturating_sub(cfg.burn_in);
    chain.acceptance = if kept == 0 {
        0.0
    } else {
        kept_acc as f64 / kept as f64
    };
    chain.step = step;
    chain
}
