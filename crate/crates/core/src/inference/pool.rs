use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsl::{parse_program, Evaluator, ExpansionCounts};

use super::{Hypothesis, InferenceError, Result};

pub const POOL_SCHEMA_VERSION: u32 = 1;

/// One distinct program found by the sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolEntry {
    pub program: String,
    pub counts: ExpansionCounts,
    /// Extension size in the trial's universe.
    pub size: usize,
    /// Post-burn-in steps any chain spent on this program.
    pub visits: u64,
    /// Times the program was proposed.
    pub proposals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainMeta {
    pub seed: u64,
    pub steps: usize,
    pub chains: usize,
    pub burn_in: usize,
    pub depth_cap: u32,
    pub theta_orient: f64,
    pub theta_config: f64,
    pub pool_rule: super::PoolRule,
    /// Acceptance rate of each chain.
    pub acceptance: Vec<f64>,
}

/// The deduplicated hypotheses visited by a sampler run, sorted by program text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisSet {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial_id: Option<String>,
    pub meta: ChainMeta,
    pub entries: Vec<PoolEntry>,
}

impl HypothesisSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Re-evaluate every entry against the trial's universe.
    pub fn hypotheses(&self, ev: &Evaluator) -> Result<Vec<Hypothesis>> {
        self.entries
            .iter()
            .map(|e| {
                let program = parse_program(&e.program)?;
                let extension = ev.evaluate(&program)?;
                if extension.size() != e.size {
                    return Err(InferenceError::Schema(format!(
                        "{} has {} members here but {} in the pool file",
                        e.program,
                        extension.size(),
                        e.size
                    )));
                }
                Ok(Hypothesis {
                    program,
                    counts: e.counts,
                    extension,
                    visits: e.visits,
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("pool serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<HypothesisSet> {
        let set: HypothesisSet =
            serde_json::from_str(text).map_err(|e| InferenceError::Schema(e.to_string()))?;
        if set.schema_version != POOL_SCHEMA_VERSION {
            return Err(InferenceError::Schema(format!(
                "unsupported schema_version {}",
                set.schema_version
            )));
        }
        if set.entries.windows(2).any(|w| w[0].program >= w[1].program) {
            return Err(InferenceError::Schema(
                "entries must be unique and sorted by program".into(),
            ));
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: &Path) -> Result<HypothesisSet> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InferenceError::Schema(format!("{}: {e}", path.display())))?;
        HypothesisSet::from_json(&text)
    }
}
