//! Tree-regeneration Metropolis-Hastings over program derivations.
//!
//! Most proposals pick a derivation node uniformly and redraw its subtree from
//! the grammar. The same pair of programs can be linked through any node at or
//! above the lowest node that covers all their differences, so the proposal
//! density sums over those routes.
//!
//! Two further moves, each reversible on its own, help the chain cross between
//! concepts that subtree redraws rarely connect: toggling all-rotations or
//! attach/attach* in place, and wrapping a subexpression in a map whose body
//! ignores its variable (or the reverse).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsl::{
    to_program, Choice, Derivation, Evaluator, ExpansionCounts, Grammar, Nonterminal, PrimSet, Slot,
};
use crate::geometry::FigureId;

use super::pool::{ChainMeta, HypothesisSet, PoolEntry, POOL_SCHEMA_VERSION};
use super::{check_examples, log_likelihood, InferenceError, Result};

/// Share of steps that toggle a node between its two parameterized forms.
const FLIP: f64 = 0.2;

fn subtree<'a>(d: &'a Derivation, path: &[usize]) -> &'a Derivation {
    path.iter().fold(d, |node, &i| &node.children[i])
}

/// Toggle a uniformly chosen START or COMB node, keeping its children.
///
/// START switches between all-rotations and plain; COMB switches between attach
/// and attach*, drawing the index from the grammar when one is added. Returns the
/// proposal with its forward and reverse log proposal probabilities.
fn flip_proposal<R: Rng>(
    g: &Grammar,
    d: &Derivation,
    rng: &mut R,
) -> Result<(Derivation, f64, f64)> {
    let sites: Vec<(Vec<usize>, Slot)> = g
        .nodes(d)
        .into_iter()
        .filter(|(_, s)| matches!(s.nt, Nonterminal::Start | Nonterminal::Comb))
        .collect();
    let log_site = -(sites.len() as f64).ln();
    let (path, slot) = &sites[rng.random_range(0..sites.len())];
    let node = subtree(d, path);
    let (flipped, index_log_prob) = match node.choice {
        Choice::OrientAll => (
            Derivation {
                choice: Choice::OrientNone,
                children: node.children.clone(),
            },
            0.0,
        ),
        Choice::OrientNone => (
            Derivation {
                choice: Choice::OrientAll,
                children: node.children.clone(),
            },
            0.0,
        ),
        Choice::CombFixed => (
            Derivation {
                choice: Choice::CombFree,
                children: node.children[..2].to_vec(),
            },
            0.0,
        ),
        Choice::CombFree => {
            let idx_slot = g.child_slots(*slot, Choice::CombFixed)[2];
            let idx = g.sample_slot(idx_slot, rng)?;
            let lp = g.derivation_log_prob(idx_slot, &idx)?;
            let mut children = node.children.clone();
            children.push(idx);
            (
                Derivation {
                    choice: Choice::CombFixed,
                    children,
                },
                lp,
            )
        }
        other => unreachable!("{other:?} is not a flip site"),
    };
    let (forward, backward) = match node.choice {
        Choice::CombFree => (log_site + index_log_prob, log_site),
        Choice::CombFixed => {
            let idx_slot = g.child_slots(*slot, Choice::CombFixed)[2];
            (
                log_site,
                log_site + g.derivation_log_prob(idx_slot, &node.children[2])?,
            )
        }
        _ => (log_site, log_site),
    };
    Ok((d.replaced(path, flipped), forward, backward))
}

/// Share of steps that wrap a subexpression in a map or unwrap one.
const WRAP: f64 = 0.1;

/// Whether the lambda variable of an enclosing map occurs free in `d`.
fn uses_variable(d: &Derivation) -> bool {
    match d.choice {
        Choice::PrimSet(PrimSet::Var) => true,
        // An inner map rebinds the variable in its body but not in its set argument.
        Choice::FsetMap => uses_variable(&d.children[1]),
        _ => d.children.iter().any(uses_variable),
    }
}

/// Move an FSET outside any lambda into `(map (lambda x FSET) P)`, or the reverse
/// for a map whose body ignores its variable. Both sides denote the same set.
/// Returns `None` when no site exists or the result would break the depth cap.
fn wrap_proposal<R: Rng>(
    g: &Grammar,
    d: &Derivation,
    rng: &mut R,
) -> Result<Option<(Derivation, f64, f64)>> {
    let nodes = g.nodes(d);
    let wrap_sites = |nodes: &[(Vec<usize>, Slot)]| -> Vec<(Vec<usize>, Slot)> {
        nodes
            .iter()
            .filter(|(_, s)| s.nt == Nonterminal::Fset && !s.in_body)
            .cloned()
            .collect()
    };
    let unwrap_sites = |d: &Derivation, nodes: &[(Vec<usize>, Slot)]| -> Vec<(Vec<usize>, Slot)> {
        wrap_sites(nodes)
            .into_iter()
            .filter(|(p, _)| {
                let n = subtree(d, p);
                n.choice == Choice::FsetMap && !uses_variable(&n.children[0])
            })
            .collect()
    };
    let half = 0.5f64.ln();
    if rng.random::<bool>() {
        let sites = wrap_sites(&nodes);
        let (path, slot) = &sites[rng.random_range(0..sites.len())];
        let set_slot = g.child_slots(*slot, Choice::FsetMap)[1];
        let set = g.sample_slot(set_slot, rng)?;
        let set_log_prob = g.derivation_log_prob(set_slot, &set)?;
        let wrapped = Derivation {
            choice: Choice::FsetMap,
            children: vec![subtree(d, path).clone(), set],
        };
        let proposal = d.replaced(path, wrapped);
        if g.derivation_log_prob(Slot::start(), &proposal).is_err() {
            return Ok(None);
        }
        let back = unwrap_sites(&proposal, &g.nodes(&proposal)).len();
        let forward = half - (sites.len() as f64).ln() + set_log_prob;
        Ok(Some((proposal, forward, half - (back as f64).ln())))
    } else {
        let sites = unwrap_sites(d, &nodes);
        if sites.is_empty() {
            return Ok(None);
        }
        let (path, slot) = &sites[rng.random_range(0..sites.len())];
        let map = subtree(d, path);
        let set_slot = g.child_slots(*slot, Choice::FsetMap)[1];
        let set_log_prob = g.derivation_log_prob(set_slot, &map.children[1])?;
        let proposal = d.replaced(path, map.children[0].clone());
        let back = wrap_sites(&g.nodes(&proposal)).len();
        let forward = half - (sites.len() as f64).ln();
        Ok(Some((
            proposal,
            forward,
            half - (back as f64).ln() + set_log_prob,
        )))
    }
}

/// Which programs enter the hypothesis pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolRule {
    /// Every program a chain proposed or started from.
    #[default]
    Proposed,
    /// Only programs a chain occupied.
    Accepted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    pub steps: usize,
    pub chains: usize,
    pub seed: u64,
    /// Fraction of each chain excluded from visit counts.
    pub burn_in: f64,
    pub pool_rule: PoolRule,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            steps: 100_000,
            chains: 3,
            seed: 0,
            burn_in: 0.1,
            pool_rule: PoolRule::Proposed,
        }
    }
}

impl McmcConfig {
    /// Three chains of 10,000 steps.
    pub fn desk() -> McmcConfig {
        McmcConfig {
            steps: 10_000,
            ..McmcConfig::default()
        }
    }
}

struct State {
    derivation: Derivation,
    counts: ExpansionCounts,
    log_prior: f64,
    log_lik: f64,
    size: usize,
}

#[derive(Default)]
struct LocalEntry {
    counts: ExpansionCounts,
    size: usize,
    visits: u64,
    proposals: u64,
}

struct ChainOutput {
    pool: BTreeMap<String, LocalEntry>,
    acceptance: f64,
}

fn score(
    g: &Grammar,
    ev: &Evaluator,
    examples: &[FigureId],
    derivation: Derivation,
) -> Result<State> {
    let counts = g.derivation_counts(&derivation)?;
    let program = to_program(&derivation);
    let ext = ev.evaluate(&program)?;
    Ok(State {
        log_prior: counts.log_prior(g.theta_orient, g.theta_config),
        log_lik: log_likelihood(&ext, examples),
        size: ext.size(),
        counts,
        derivation,
    })
}

/// Path of the lowest node containing every difference, or `None` when equal.
fn difference_root(a: &Derivation, b: &Derivation) -> Option<Vec<usize>> {
    if a.choice != b.choice || a.children.len() != b.children.len() {
        return Some(Vec::new());
    }
    let mut differing = a
        .children
        .iter()
        .zip(&b.children)
        .enumerate()
        .filter(|(_, (x, y))| x != y);
    let (i, (x, y)) = differing.next()?;
    if differing.next().is_some() {
        return Some(Vec::new());
    }
    let mut path = vec![i];
    path.extend(difference_root(x, y)?);
    Some(path)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log probability of proposing `to` from `from`, given the difference root.
fn log_proposal(g: &Grammar, from: &Derivation, to: &Derivation, root: &[usize]) -> Result<f64> {
    let log_nodes = (from.size() as f64).ln();
    let mut slot = Slot::start();
    let mut node = to;
    let mut terms = Vec::with_capacity(root.len() + 1);
    for depth in 0..=root.len() {
        terms.push(g.derivation_log_prob(slot, node)? - log_nodes);
        if depth < root.len() {
            let i = root[depth];
            slot = g.child_slots(slot, node.choice)[i];
            node = &node.children[i];
        }
    }
    Ok(log_sum_exp(&terms))
}

fn run_chain(
    g: &Grammar,
    ev: &Evaluator,
    examples: &[FigureId],
    cfg: &McmcConfig,
    chain: usize,
) -> Result<ChainOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64);
    let burn_in = (cfg.steps as f64 * cfg.burn_in).floor() as usize;
    let mut pool: BTreeMap<String, LocalEntry> = BTreeMap::new();
    let record =
        |pool: &mut BTreeMap<String, LocalEntry>, s: &State, proposed: bool, visited: bool| {
            let e = pool
                .entry(to_program(&s.derivation).to_string())
                .or_insert_with(|| LocalEntry {
                    counts: s.counts,
                    size: s.size,
                    ..LocalEntry::default()
                });
            e.proposals += proposed as u64;
            e.visits += visited as u64;
        };

    let mut current = score(g, ev, examples, g.sample_slot(Slot::start(), &mut rng)?)?;
    record(&mut pool, &current, true, false);
    let mut accepted = 0usize;
    for step in 0..cfg.steps {
        let kernel = rng.random::<f64>();
        let proposal = if kernel < FLIP {
            Some(flip_proposal(g, &current.derivation, &mut rng)?)
        } else if kernel < FLIP + WRAP {
            wrap_proposal(g, &current.derivation, &mut rng)?
        } else {
            let nodes = g.nodes(&current.derivation);
            let (path, slot) = &nodes[rng.random_range(0..nodes.len())];
            let subtree = g.sample_slot(*slot, &mut rng)?;
            let proposal = current.derivation.replaced(path, subtree);
            match difference_root(&current.derivation, &proposal) {
                None => None,
                Some(root) => {
                    let forward = log_proposal(g, &current.derivation, &proposal, &root)?;
                    let backward = log_proposal(g, &proposal, &current.derivation, &root)?;
                    Some((proposal, forward, backward))
                }
            }
        };
        let accept = match proposal {
            // No change: redrawing reproduced the program or no move applied.
            None => true,
            Some((proposal, forward, backward)) => {
                let cand = score(g, ev, examples, proposal)?;
                if cfg.pool_rule == PoolRule::Proposed {
                    record(&mut pool, &cand, true, false);
                }
                let hastings = cand.log_prior - current.log_prior + backward - forward;
                let log_ratio = match (current.log_lik.is_finite(), cand.log_lik.is_finite()) {
                    (true, true) => hastings + cand.log_lik - current.log_lik,
                    (false, true) => f64::INFINITY,
                    (true, false) => f64::NEG_INFINITY,
                    (false, false) => hastings,
                };
                let take = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
                if take {
                    current = cand;
                }
                take
            }
        };
        accepted += accept as usize;
        let visited = step >= burn_in;
        if visited || cfg.pool_rule == PoolRule::Accepted {
            record(&mut pool, &current, false, visited);
        }
    }
    Ok(ChainOutput {
        pool,
        acceptance: accepted as f64 / cfg.steps.max(1) as f64,
    })
}

/// Run independent chains and pool the distinct programs they found.
pub fn mcmc_run(
    g: &Grammar,
    ev: &Evaluator,
    examples: &[FigureId],
    cfg: &McmcConfig,
) -> Result<HypothesisSet> {
    g.validate()?;
    check_examples(ev, examples)?;
    if cfg.steps == 0 || cfg.chains == 0 || !(0.0..1.0).contains(&cfg.burn_in) {
        return Err(InferenceError::BadConfig(format!(
            "steps {} and chains {} must be positive, burn-in {} inside [0, 1)",
            cfg.steps, cfg.chains, cfg.burn_in
        )));
    }
    let outputs = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(g, ev, examples, cfg, c))
        .collect::<Result<Vec<_>>>()?;

    let mut merged: BTreeMap<String, LocalEntry> = BTreeMap::new();
    let mut acceptance = Vec::with_capacity(outputs.len());
    for out in outputs {
        acceptance.push(out.acceptance);
        for (program, e) in out.pool {
            let slot = merged.entry(program).or_insert_with(|| LocalEntry {
                counts: e.counts,
                size: e.size,
                ..LocalEntry::default()
            });
            slot.visits += e.visits;
            slot.proposals += e.proposals;
        }
    }
    Ok(HypothesisSet {
        schema_version: POOL_SCHEMA_VERSION,
        trial_id: None,
        meta: ChainMeta {
            seed: cfg.seed,
            steps: cfg.steps,
            chains: cfg.chains,
            burn_in: (cfg.steps as f64 * cfg.burn_in).floor() as usize,
            depth_cap: g.depth_cap,
            theta_orient: g.theta_orient,
            theta_config: g.theta_config,
            pool_rule: cfg.pool_rule,
            acceptance,
        },
        entries: merged
            .into_iter()
            .map(|(program, e)| PoolEntry {
                program,
                counts: e.counts,
                size: e.size,
                visits: e.visits,
                proposals: e.proposals,
            })
            .collect(),
    })
}
