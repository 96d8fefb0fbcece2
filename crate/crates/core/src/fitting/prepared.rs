use std::collections::BTreeMap;

use crate::geometry::FigureId;
use crate::inference::{log_likelihood, Hypothesis, InferenceError};

use super::Result;

/// Hypotheses that agree on every parameterized count and on membership of
/// every test item, collapsed into one term.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub counts: [u32; 4],
    /// Log of the summed `exp(log_const + log_likelihood)` over the group.
    pub log_mass: f64,
    pub members: Vec<bool>,
}

impl Group {
    fn log_weight(&self, ln: &[f64; 4]) -> f64 {
        self.log_mass
            + self
                .counts
                .iter()
                .zip(ln)
                .map(|(&n, l)| if n == 0 { 0.0 } else { n as f64 * l })
                .sum::<f64>()
    }
}

/// A trial's pool reduced to what re-scoring at new grammar parameters needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTrial {
    pub trial_id: String,
    pub item_ids: Vec<String>,
    pub groups: Vec<Group>,
}

impl PreparedTrial {
    pub fn new(
        trial_id: impl Into<String>,
        item_ids: Vec<String>,
        items: &[FigureId],
        examples: &[FigureId],
        hypotheses: &[Hypothesis],
    ) -> Result<PreparedTrial> {
        assert_eq!(item_ids.len(), items.len(), "one id per test item");
        let mut groups: BTreeMap<([u32; 4], Vec<bool>), Vec<f64>> = BTreeMap::new();
        for h in hypotheses {
            let ll = log_likelihood(&h.extension, examples);
            if !ll.is_finite() {
                continue;
            }
            let c = &h.counts;
            let key = (
                [
                    c.n_orient_yes,
                    c.n_orient_no,
                    c.n_config_free,
                    c.n_config_fixed,
                ],
                items.iter().map(|&y| h.extension.contains(y)).collect(),
            );
            groups.entry(key).or_default().push(c.log_const + ll);
        }
        if groups.is_empty() {
            return Err(InferenceError::AllZeroWeights.into());
        }
        let groups = groups
            .into_iter()
            .map(|((counts, members), terms)| {
                let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let log_mass = max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
                Group {
                    counts,
                    log_mass,
                    members,
                }
            })
            .collect();
        Ok(PreparedTrial {
            trial_id: trial_id.into(),
            item_ids,
            groups,
        })
    }

    /// Posterior predictive of every test item at the given grammar parameters.
    pub fn predict(&self, theta_orient: f64, theta_config: f64) -> Vec<f64> {
        let ln = [
            theta_orient.ln(),
            (1.0 - theta_orient).ln(),
            theta_config.ln(),
            (1.0 - theta_config).ln(),
        ];
        let logs: Vec<f64> = self.groups.iter().map(|g| g.log_weight(&ln)).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut q = vec![0.0; self.item_ids.len()];
        let mut total = 0.0;
        for (g, l) in self.groups.iter().zip(&logs) {
            let w = (l - max).exp();
            total += w;
            for (qi, &m) in q.iter_mut().zip(&g.members) {
                if m {
                    *qi += w;
                }
            }
        }
        q.iter_mut().for_each(|qi| *qi = (*qi / total).min(1.0));
        q
    }
}
