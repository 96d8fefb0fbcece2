//! The probabilistic grammar over concept programs.
//!
//! ```text
//! START   -> (all-rotations FSET)   [theta_orient]
//!          | FSET                   [1 - theta_orient]
//! FSET    -> PRIMSET | COMB | (has PRIM) | (map (lambda x FBODY) PRIMSET) | (rotate FSET ANGLE)
//! COMB    -> (attach FSET FSET)     [theta_config]
//!          | (attach* FSET FSET IDX) [1 - theta_config]
//! PRIMSET -> p1 | p2 | p3 | p4 | S  (| x inside a lambda body)
//! PRIM    -> p1 | p2 | p3 | p4
//! ANGLE   -> 0 | 90 | 180 | 270
//! IDX     -> 1 | ... | 8
//! ```
//!
//! FBODY is FSET with the lambda variable in scope. Every choice other than the
//! two parameterized ones is uniform over the alternatives that still fit under
//! the depth cap. Depth counts nonterminal nodes of the derivation, with START at
//! level 1; an alternative is allowed at level `d` only if each child nonterminal
//! can complete by level `depth_cap`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Angle, PrimId};

use super::ast::{ConceptProgram, Expr, PrimSet, MAX_CONFIG_INDEX};
use super::{DslError, N_PRIMS};

pub const DEFAULT_DEPTH_CAP: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Nonterminal {
    Start,
    Fset,
    Comb,
    PrimSet,
    Prim,
    Angle,
    Idx,
}

impl Nonterminal {
    /// Fewest derivation levels (including this node) needed to finish.
    fn min_height(self) -> u32 {
        match self {
            Nonterminal::Start => 3,
            Nonterminal::Fset => 2,
            Nonterminal::Comb => 3,
            _ => 1,
        }
    }
}

/// A nonterminal occurrence: which symbol, its derivation level, and whether the
/// lambda variable is in scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub nt: Nonterminal,
    pub level: u32,
    pub in_body: bool,
}

impl Slot {
    pub fn start() -> Slot {
        Slot {
            nt: Nonterminal::Start,
            level: 1,
            in_body: false,
        }
    }

    fn child(self, nt: Nonterminal) -> Slot {
        Slot {
            nt,
            level: self.level + 1,
            in_body: self.in_body,
        }
    }
}

/// One expansion step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    OrientAll,
    OrientNone,
    FsetSet,
    FsetComb,
    FsetHas,
    FsetMap,
    FsetRotate,
    CombFree,
    CombFixed,
    PrimSet(PrimSet),
    Prim(PrimId),
    Angle(Angle),
    Idx(u8),
}

const FSET_CHOICES: [Choice; 5] = [
    Choice::FsetSet,
    Choice::FsetComb,
    Choice::FsetHas,
    Choice::FsetMap,
    Choice::FsetRotate,
];

/// A derivation tree: the grammar-level view of a program.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Derivation {
    pub choice: Choice,
    pub children: Vec<Derivation>,
}

impl Derivation {
    fn leaf(choice: Choice) -> Derivation {
        Derivation {
            choice,
            children: Vec::new(),
        }
    }

    /// Number of nonterminal nodes.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn at(&self, path: &[usize]) -> &Derivation {
        path.iter().fold(self, |d, &i| &d.children[i])
    }

    /// Copy with the subtree at `path` replaced.
    pub fn replaced(&self, path: &[usize], new: Derivation) -> Derivation {
        match path.split_first() {
            None => new,
            Some((&i, rest)) => {
                let mut out = self.clone();
                out.children[i] = self.children[i].replaced(rest, new);
                out
            }
        }
    }
}

/// Counts of the parameterized expansions in a derivation plus the summed
/// log-probability of every other expansion.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExpansionCounts {
    pub n_orient_yes: u32,
    pub n_orient_no: u32,
    pub n_config_free: u32,
    pub n_config_fixed: u32,
    pub log_const: f64,
}

impl ExpansionCounts {
    /// Log prior at the given grammar parameters.
    pub fn log_prior(&self, theta_orient: f64, theta_config: f64) -> f64 {
        let term = |n: u32, p: f64| if n == 0 { 0.0 } else { n as f64 * p.ln() };
        self.log_const
            + term(self.n_orient_yes, theta_orient)
            + term(self.n_orient_no, 1.0 - theta_orient)
            + term(self.n_config_free, theta_config)
            + term(self.n_config_fixed, 1.0 - theta_config)
    }
}

/// Grammar parameters. Only the orientation and configuration choices are free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grammar {
    pub theta_orient: f64,
    pub theta_config: f64,
    pub depth_cap: u32,
}

impl Default for Grammar {
    fn default() -> Self {
        Grammar {
            theta_orient: 0.5,
            theta_config: 0.5,
            depth_cap: DEFAULT_DEPTH_CAP,
        }
    }
}

impl Grammar {
    pub fn new(theta_orient: f64, theta_config: f64, depth_cap: u32) -> Result<Grammar, DslError> {
        let g = Grammar {
            theta_orient,
            theta_config,
            depth_cap,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), DslError> {
        let inside = |t: f64| t > 0.0 && t < 1.0;
        if !inside(self.theta_orient) || !inside(self.theta_config) {
            return Err(DslError::BadGrammar(format!(
                "parameters must lie strictly inside (0, 1): {} {}",
                self.theta_orient, self.theta_config
            )));
        }
        if self.depth_cap < Nonterminal::Start.min_height() {
            return Err(DslError::BadGrammar(format!(
                "depth cap {} < 3",
                self.depth_cap
            )));
        }
        Ok(())
    }

    pub fn with_thetas(&self, theta_orient: f64, theta_config: f64) -> Grammar {
        Grammar {
            theta_orient,
            theta_config,
            ..*self
        }
    }

    /// Child slots produced by an expansion.
    pub fn child_slots(&self, slot: Slot, choice: Choice) -> Vec<Slot> {
        use Nonterminal as N;
        match choice {
            Choice::OrientAll | Choice::OrientNone => vec![slot.child(N::Fset)],
            Choice::FsetSet => vec![slot.child(N::PrimSet)],
            Choice::FsetComb => vec![slot.child(N::Comb)],
            Choice::FsetHas => vec![slot.child(N::Prim)],
            Choice::FsetMap => vec![
                Slot {
                    in_body: true,
                    ..slot.child(N::Fset)
                },
                slot.child(N::PrimSet),
            ],
            Choice::FsetRotate => vec![slot.child(N::Fset), slot.child(N::Angle)],
            Choice::CombFree => vec![slot.child(N::Fset), slot.child(N::Fset)],
            Choice::CombFixed => vec![slot.child(N::Fset), slot.child(N::Fset), slot.child(N::Idx)],
            Choice::PrimSet(_) | Choice::Prim(_) | Choice::Angle(_) | Choice::Idx(_) => vec![],
        }
    }

    fn fits(&self, slot: Slot, choice: Choice) -> bool {
        self.child_slots(slot, choice)
            .iter()
            .all(|c| c.level + c.nt.min_height() - 1 <= self.depth_cap)
    }

    /// Allowed expansions at a slot with their probabilities (summing to one).
    pub fn alternatives(&self, slot: Slot) -> Vec<(Choice, f64)> {
        let uniform = |choices: Vec<Choice>| {
            let n = choices.len() as f64;
            choices
                .into_iter()
                .map(|c| (c, 1.0 / n))
                .collect::<Vec<_>>()
        };
        let weighted = |pairs: [(Choice, f64); 2]| {
            pairs
                .into_iter()
                .filter(|&(c, _)| self.fits(slot, c))
                .collect::<Vec<_>>()
        };
        let alts = match slot.nt {
            Nonterminal::Start => weighted([
                (Choice::OrientAll, self.theta_orient),
                (Choice::OrientNone, 1.0 - self.theta_orient),
            ]),
            Nonterminal::Comb => weighted([
                (Choice::CombFree, self.theta_config),
                (Choice::CombFixed, 1.0 - self.theta_config),
            ]),
            Nonterminal::Fset => uniform(
                FSET_CHOICES
                    .into_iter()
                    .filter(|&c| self.fits(slot, c))
                    .collect(),
            ),
            Nonterminal::PrimSet => {
                let mut v: Vec<Choice> = (0..N_PRIMS as u8)
                    .map(|i| Choice::PrimSet(PrimSet::One(PrimId(i))))
                    .collect();
                v.push(Choice::PrimSet(PrimSet::All));
                if slot.in_body {
                    v.push(Choice::PrimSet(PrimSet::Var));
                }
                uniform(v)
            }
            Nonterminal::Prim => uniform(
                (0..N_PRIMS as u8)
                    .map(|i| Choice::Prim(PrimId(i)))
                    .collect(),
            ),
            Nonterminal::Angle => uniform(Angle::ALL.into_iter().map(Choice::Angle).collect()),
            Nonterminal::Idx => uniform((1..=MAX_CONFIG_INDEX).map(Choice::Idx).collect()),
        };
        // The two parameterized pairs share their children's slots, so they are
        // either both allowed or both excluded; no renormalization is needed.
        debug_assert!(
            alts.is_empty() || (alts.iter().map(|a| a.1).sum::<f64>() - 1.0).abs() < 1e-12
        );
        alts
    }

    /// Log-probability of choosing `choice` at `slot`, if allowed.
    pub fn choice_log_prob(&self, slot: Slot, choice: Choice) -> Option<f64> {
        self.alternatives(slot)
            .into_iter()
            .find(|&(c, _)| c == choice)
            .map(|(_, p)| p.ln())
    }

    /// Draw a derivation for `slot`.
    pub fn sample_slot<R: Rng + ?Sized>(
        &self,
        slot: Slot,
        rng: &mut R,
    ) -> Result<Derivation, DslError> {
        let alts = self.alternatives(slot);
        if alts.is_empty() {
            return Err(DslError::NoTerminalAlternative(slot.level));
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = alts[alts.len() - 1].0;
        for &(c, p) in &alts {
            acc += p;
            if u < acc {
                chosen = c;
                break;
            }
        }
        let children = self
            .child_slots(slot, chosen)
            .into_iter()
            .map(|s| self.sample_slot(s, rng))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Derivation {
            choice: chosen,
            children,
        })
    }

    /// Draw a program from the prior.
    pub fn sample_program<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ConceptProgram, DslError> {
        let d = self.sample_slot(Slot::start(), rng)?;
        Ok(to_program(&d))
    }

    /// Log generation probability of a derivation rooted at `slot`.
    pub fn derivation_log_prob(&self, slot: Slot, d: &Derivation) -> Result<f64, DslError> {
        let mut total = self
            .choice_log_prob(slot, d.choice)
            .ok_or_else(|| self.rejection(slot, d))?;
        let slots = self.child_slots(slot, d.choice);
        if slots.len() != d.children.len() {
            return Err(DslError::IllTyped(format!(
                "{:?} expects {} children",
                d.choice,
                slots.len()
            )));
        }
        for (s, c) in slots.into_iter().zip(&d.children) {
            total += self.derivation_log_prob(s, c)?;
        }
        Ok(total)
    }

    fn rejection(&self, slot: Slot, d: &Derivation) -> DslError {
        if slot.level > self.depth_cap || !self.fits(slot, d.choice) {
            DslError::DepthCapExceeded(self.depth_cap)
        } else {
            DslError::IllTyped(format!("{:?} cannot expand {:?}", d.choice, slot.nt))
        }
    }

    pub fn log_prior(&self, p: &ConceptProgram) -> Result<f64, DslError> {
        self.derivation_log_prob(Slot::start(), &derive(p))
    }

    pub fn expansion_counts(&self, p: &ConceptProgram) -> Result<ExpansionCounts, DslError> {
        let mut counts = ExpansionCounts::default();
        self.accumulate_counts(Slot::start(), &derive(p), &mut counts)?;
        Ok(counts)
    }

    pub fn derivation_counts(&self, d: &Derivation) -> Result<ExpansionCounts, DslError> {
        let mut counts = ExpansionCounts::default();
        self.accumulate_counts(Slot::start(), d, &mut counts)?;
        Ok(counts)
    }

    fn accumulate_counts(
        &self,
        slot: Slot,
        d: &Derivation,
        counts: &mut ExpansionCounts,
    ) -> Result<(), DslError> {
        let lp = self
            .choice_log_prob(slot, d.choice)
            .ok_or_else(|| self.rejection(slot, d))?;
        match d.choice {
            Choice::OrientAll => counts.n_orient_yes += 1,
            Choice::OrientNone => counts.n_orient_no += 1,
            Choice::CombFree => counts.n_config_free += 1,
            Choice::CombFixed => counts.n_config_fixed += 1,
            _ => counts.log_const += lp,
        }
        for (s, c) in self
            .child_slots(slot, d.choice)
            .into_iter()
            .zip(&d.children)
        {
            self.accumulate_counts(s, c, counts)?;
        }
        Ok(())
    }

    /// Every nonterminal node of a derivation in preorder, as (path, slot).
    pub fn nodes(&self, d: &Derivation) -> Vec<(Vec<usize>, Slot)> {
        let mut out = Vec::with_capacity(d.size());
        self.collect_nodes(d, Slot::start(), &mut Vec::new(), &mut out);
        out
    }

    fn collect_nodes(
        &self,
        d: &Derivation,
        slot: Slot,
        path: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, Slot)>,
    ) {
        out.push((path.clone(), slot));
        for (i, (s, c)) in self
            .child_slots(slot, d.choice)
            .into_iter()
            .zip(&d.children)
            .enumerate()
        {
            path.push(i);
            self.collect_nodes(c, s, path, out);
            path.pop();
        }
    }
}

/// The derivation of a well-typed program.
pub fn derive(p: &ConceptProgram) -> Derivation {
    match p.root() {
        Expr::AllRotations(e) => Derivation {
            choice: Choice::OrientAll,
            children: vec![derive_fset(e)],
        },
        e => Derivation {
            choice: Choice::OrientNone,
            children: vec![derive_fset(e)],
        },
    }
}

fn derive_fset(e: &Expr) -> Derivation {
    match e {
        Expr::Set(s) => Derivation {
            choice: Choice::FsetSet,
            children: vec![Derivation::leaf(Choice::PrimSet(*s))],
        },
        Expr::Has(p) => Derivation {
            choice: Choice::FsetHas,
            children: vec![Derivation::leaf(Choice::Prim(*p))],
        },
        Expr::Attach(a, b) => Derivation {
            choice: Choice::FsetComb,
            children: vec![Derivation {
                choice: Choice::CombFree,
                children: vec![derive_fset(a), derive_fset(b)],
            }],
        },
        Expr::AttachFixed(a, b, i) => Derivation {
            choice: Choice::FsetComb,
            children: vec![Derivation {
                choice: Choice::CombFixed,
                children: vec![
                    derive_fset(a),
                    derive_fset(b),
                    Derivation::leaf(Choice::Idx(*i)),
                ],
            }],
        },
        Expr::Map(body, over) => Derivation {
            choice: Choice::FsetMap,
            children: vec![derive_fset(body), Derivation::leaf(Choice::PrimSet(*over))],
        },
        Expr::Rotate(inner, a) => Derivation {
            choice: Choice::FsetRotate,
            children: vec![derive_fset(inner), Derivation::leaf(Choice::Angle(*a))],
        },
        // Unreachable for checked programs: all-rotations only appears at the root.
        Expr::AllRotations(inner) => derive_fset(inner),
    }
}

/// The program of a START-rooted derivation produced by this grammar.
pub fn to_program(d: &Derivation) -> ConceptProgram {
    let fset = fset_expr(&d.children[0]);
    let root = match d.choice {
        Choice::OrientAll => Expr::AllRotations(Box::new(fset)),
        _ => fset,
    };
    ConceptProgram::new_unchecked(root)
}

fn fset_expr(d: &Derivation) -> Expr {
    let leaf_primset = |d: &Derivation| match d.choice {
        Choice::PrimSet(s) => s,
        other => unreachable!("expected PRIMSET, got {other:?}"),
    };
    match d.choice {
        Choice::FsetSet => Expr::Set(leaf_primset(&d.children[0])),
        Choice::FsetHas => match d.children[0].choice {
            Choice::Prim(p) => Expr::Has(p),
            other => unreachable!("expected PRIM, got {other:?}"),
        },
        Choice::FsetComb => {
            let comb = &d.children[0];
            let a = Box::new(fset_expr(&comb.children[0]));
            let b = Box::new(fset_expr(&comb.children[1]));
            match (comb.choice, comb.children.get(2).map(|c| c.choice)) {
                (Choice::CombFree, _) => Expr::Attach(a, b),
                (Choice::CombFixed, Some(Choice::Idx(i))) => Expr::AttachFixed(a, b, i),
                other => unreachable!("bad COMB expansion {other:?}"),
            }
        }
        Choice::FsetMap => Expr::Map(
            Box::new(fset_expr(&d.children[0])),
            leaf_primset(&d.children[1]),
        ),
        Choice::FsetRotate => match d.children[1].choice {
            Choice::Angle(a) => Expr::Rotate(Box::new(fset_expr(&d.children[0])), a),
            other => unreachable!("expected ANGLE, got {other:?}"),
        },
        other => unreachable!("expected FSET expansion, got {other:?}"),
    }
}
