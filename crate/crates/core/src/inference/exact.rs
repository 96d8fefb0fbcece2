//! Exhaustive enumeration of every program under a small depth cap.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dsl::{
    to_program, Choice, ConceptProgram, Derivation, Evaluator, ExpansionCounts, Extension, Grammar,
    Slot,
};
use crate::geometry::FigureId;

use super::{check_examples, log_likelihood, normalize_log_weights, InferenceError, Result};

pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1_000_000;

/// Number of distinct derivations from START, saturating at `u128::MAX`.
pub fn count_programs(g: &Grammar) -> u128 {
    fn count(g: &Grammar, slot: Slot, memo: &mut HashMap<Slot, u128>) -> u128 {
        if let Some(&n) = memo.get(&slot) {
            return n;
        }
        let n = g
            .alternatives(slot)
            .into_iter()
            .map(|(c, _)| {
                g.child_slots(slot, c)
                    .into_iter()
                    .map(|s| count(g, s, memo))
                    .fold(1u128, u128::saturating_mul)
            })
            .fold(0u128, u128::saturating_add);
        memo.insert(slot, n);
        n
    }
    count(g, Slot::start(), &mut HashMap::new())
}

fn add_counts(a: &ExpansionCounts, b: &ExpansionCounts) -> ExpansionCounts {
    ExpansionCounts {
        n_orient_yes: a.n_orient_yes + b.n_orient_yes,
        n_orient_no: a.n_orient_no + b.n_orient_no,
        n_config_free: a.n_config_free + b.n_config_free,
        n_config_fixed: a.n_config_fixed + b.n_config_fixed,
        log_const: a.log_const + b.log_const,
    }
}

fn choice_counts(choice: Choice, p: f64) -> ExpansionCounts {
    let mut c = ExpansionCounts::default();
    match choice {
        Choice::OrientAll => c.n_orient_yes = 1,
        Choice::OrientNone => c.n_orient_no = 1,
        Choice::CombFree => c.n_config_free = 1,
        Choice::CombFixed => c.n_config_fixed = 1,
        _ => c.log_const = p.ln(),
    }
    c
}

type Items = Arc<Vec<(Derivation, ExpansionCounts)>>;

fn expand(g: &Grammar, slot: Slot, memo: &mut HashMap<Slot, Items>) -> Items {
    if let Some(items) = memo.get(&slot) {
        return Arc::clone(items);
    }
    let mut out = Vec::new();
    for (choice, p) in g.alternatives(slot) {
        let own = choice_counts(choice, p);
        let mut partial: Vec<(Vec<Derivation>, ExpansionCounts)> = vec![(Vec::new(), own)];
        for child in g.child_slots(slot, choice) {
            let options = expand(g, child, memo);
            partial = partial
                .iter()
                .flat_map(|(kids, c)| {
                    options.iter().map(move |(d, dc)| {
                        let mut kids = kids.clone();
                        kids.push(d.clone());
                        (kids, add_counts(c, dc))
                    })
                })
                .collect();
        }
        out.extend(
            partial
                .into_iter()
                .map(|(children, c)| (Derivation { choice, children }, c)),
        );
    }
    let items = Arc::new(out);
    memo.insert(slot, Arc::clone(&items));
    items
}

/// Every program the grammar can derive, with its expansion counts.
pub fn enumerate_programs(
    g: &Grammar,
    budget: u128,
) -> Result<Vec<(ConceptProgram, ExpansionCounts)>> {
    g.validate()?;
    let found = count_programs(g);
    if found > budget {
        return Err(InferenceError::EnumerationBudgetExceeded { found, budget });
    }
    let items = expand(g, Slot::start(), &mut HashMap::new());
    Ok(items.iter().map(|(d, c)| (to_program(d), *c)).collect())
}

/// The exact posterior over all programs under the depth cap.
#[derive(Debug, Clone)]
pub struct ExactPosterior {
    pub programs: Vec<ConceptProgram>,
    pub counts: Vec<ExpansionCounts>,
    pub extensions: Vec<Arc<Extension>>,
    pub weights: Vec<f64>,
}

impl ExactPosterior {
    pub fn predict(&self, item: FigureId) -> f64 {
        self.extensions
            .iter()
            .zip(&self.weights)
            .filter(|(e, _)| e.contains(item))
            .map(|(_, w)| w)
            .sum::<f64>()
            .min(1.0)
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }
}

pub fn exact_posterior(
    g: &Grammar,
    ev: &Evaluator,
    examples: &[FigureId],
    budget: u128,
) -> Result<ExactPosterior> {
    check_examples(ev, examples)?;
    let enumerated = enumerate_programs(g, budget)?;
    let extensions = enumerated
        .par_iter()
        .map(|(p, _)| ev.evaluate(p))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let scores: Vec<f64> = enumerated
        .iter()
        .zip(&extensions)
        .map(|((_, c), e)| {
            let ll = log_likelihood(e, examples);
            if ll.is_finite() {
                c.log_prior(g.theta_orient, g.theta_config) + ll
            } else {
                ll
            }
        })
        .collect();
    let weights = normalize_log_weights(&scores)?;
    let (programs, counts) = enumerated.into_iter().unzip();
    Ok(ExactPosterior {
        programs,
        counts,
        extensions,
        weights,
    })
}
