use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::GcmParams;
use crate::dsl::Grammar;
use crate::fitting::{FitConfig, FitParams};
use crate::inference::{McmcConfig, PoolRule};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSettings {
    pub steps: usize,
    pub chains: usize,
    pub burn_in: f64,
    pub pool_rule: PoolRule,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings::from(McmcConfig::default())
    }
}

impl From<McmcConfig> for SamplerSettings {
    fn from(c: McmcConfig) -> Self {
        SamplerSettings {
            steps: c.steps,
            chains: c.chains,
            burn_in: c.burn_in,
            pool_rule: c.pool_rule,
        }
    }
}

impl SamplerSettings {
    /// Three chains of 10,000 steps.
    pub fn desk() -> SamplerSettings {
        SamplerSettings::from(McmcConfig::desk())
    }

    pub fn with_seed(&self, seed: u64) -> McmcConfig {
        McmcConfig {
            steps: self.steps,
            chains: self.chains,
            seed,
            burn_in: self.burn_in,
            pool_rule: self.pool_rule,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GcmSettings {
    pub weights: GcmParams,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for GcmSettings {
    fn default() -> Self {
        let p = FitParams::default();
        GcmSettings {
            weights: GcmParams::default(),
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

/// Grammar the sampler explores when building pools.
///
/// Orientation-specific hypotheses keep a tenth of the prior mass so pools hold
/// both kinds and can be re-scored at any orientation parameter.
pub fn sampling_grammar() -> Grammar {
    Grammar {
        theta_orient: 0.9,
        theta_config: FitParams::default().theta_config,
        ..Grammar::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrammarSettings {
    pub theta_orient: f64,
    pub theta_config: f64,
    pub depth_cap: u32,
}

impl Default for GrammarSettings {
    fn default() -> Self {
        let g = sampling_grammar();
        GrammarSettings {
            theta_orient: g.theta_orient,
            theta_config: g.theta_config,
            depth_cap: g.depth_cap,
        }
    }
}

impl GrammarSettings {
    pub fn grammar(&self) -> Grammar {
        Grammar {
            theta_orient: self.theta_orient,
            theta_config: self.theta_config,
            depth_cap: self.depth_cap,
        }
    }
}

/// Everything a run needs besides the trial files, loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Grammar used while sampling hypotheses.
    pub grammar: GrammarSettings,
    pub sampler: SamplerSettings,
    /// Parameters used to score pools for prediction and synthesis.
    pub params: FitParams,
    pub gcm: GcmSettings,
    pub fit: FitConfig,
    /// Simulated participants per trial for synthetic responses.
    pub participants: u64,
    /// Accept trials whose test lists fall outside 9 to 13 items.
    pub relax_test_count: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            grammar: GrammarSettings::default(),
            sampler: SamplerSettings::default(),
            params: FitParams::default(),
            gcm: GcmSettings::default(),
            fit: FitConfig::default(),
            participants: 25,
            relax_test_count: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, HarnessError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.grammar.grammar().validate()?;
        self.params.validate()?;
        self.gcm.weights.validate()?;
        if self.sampler.steps == 0 || self.sampler.chains == 0 {
            return Err(HarnessError::Config(
                "sampler steps and chains must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_partial_files() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let partial = RunConfig::from_toml("seed = 7\n[sampler]\nsteps = 500\n").unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.sampler.steps, 500);
        assert_eq!(partial.sampler.chains, 3);
        assert_eq!(partial.grammar.grammar(), sampling_grammar());
        let capped = RunConfig::from_toml("[grammar]\ndepth_cap = 6\n").unwrap();
        assert_eq!(capped.grammar.theta_orient, 0.9);
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
        assert!(RunConfig::from_toml("[grammar]\ntheta_orient = 1.5\n").is_err());
    }
}
