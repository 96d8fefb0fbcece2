use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use fixedbitset::FixedBitSet;

use crate::geometry::{Angle, FigureId, PrimId, Universe};

use super::ast::{ConceptProgram, Expr, PrimSet};
use super::{DslError, N_PRIMS};

/// Largest number of member pairs a single attach node may combine.
pub const DEFAULT_PAIR_BUDGET: usize = 10_000_000;

/// The set of universe figures a program denotes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Extension {
    members: FixedBitSet,
}

impl Extension {
    pub fn empty(universe_len: usize) -> Extension {
        Extension {
            members: FixedBitSet::with_capacity(universe_len),
        }
    }

    pub fn from_bits(members: FixedBitSet) -> Extension {
        Extension { members }
    }

    pub fn from_ids(universe_len: usize, ids: impl IntoIterator<Item = FigureId>) -> Extension {
        let mut members = FixedBitSet::with_capacity(universe_len);
        for id in ids {
            members.insert(id as usize);
        }
        Extension { members }
    }

    pub fn size(&self) -> usize {
        self.members.count_ones(..)
    }

    pub fn contains(&self, id: FigureId) -> bool {
        self.members.contains(id as usize)
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.members
    }

    pub fn ids(&self) -> impl Iterator<Item = FigureId> + '_ {
        self.members.ones().map(|i| i as FigureId)
    }

    pub fn is_subset(&self, other: &Extension) -> bool {
        self.members.is_subset(&other.members)
    }
}

type MemoKey = (Expr, Option<PrimId>);

/// Evaluates programs against one universe, memoizing every subexpression.
///
/// Safe to share across threads; the memo only caches pure results.
#[derive(Debug)]
pub struct Evaluator<'u> {
    universe: &'u Universe,
    pair_budget: usize,
    memoize: bool,
    memo: RwLock<HashMap<MemoKey, Arc<Extension>>>,
}

impl<'u> Evaluator<'u> {
    pub fn new(universe: &'u Universe) -> Evaluator<'u> {
        Evaluator {
            universe,
            pair_budget: DEFAULT_PAIR_BUDGET,
            memoize: true,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn with_pair_budget(mut self, budget: usize) -> Self {
        self.pair_budget = budget;
        self
    }

    /// An evaluator that recomputes everything; used to cross-check the memo.
    pub fn unmemoized(universe: &'u Universe) -> Evaluator<'u> {
        Evaluator {
            memoize: false,
            ..Evaluator::new(universe)
        }
    }

    pub fn universe(&self) -> &'u Universe {
        self.universe
    }

    pub fn memo_len(&self) -> usize {
        self.memo.read().expect("memo lock").len()
    }

    pub fn evaluate(&self, p: &ConceptProgram) -> Result<Arc<Extension>, DslError> {
        self.eval(p.root(), None)
    }

    fn eval(&self, e: &Expr, binding: Option<PrimId>) -> Result<Arc<Extension>, DslError> {
        let binding = if uses_binding(e) { binding } else { None };
        if !self.memoize {
            return self.compute(e, binding).map(Arc::new);
        }
        let key = (e.clone(), binding);
        if let Some(hit) = self.memo.read().expect("memo lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let value = Arc::new(self.compute(e, binding)?);
        let mut memo = self.memo.write().expect("memo lock");
        Ok(Arc::clone(memo.entry(key).or_insert(value)))
    }

    fn compute(&self, e: &Expr, binding: Option<PrimId>) -> Result<Extension, DslError> {
        let bits = match e {
            Expr::Set(s) => self.primset(*s, binding)?,
            Expr::Has(p) => self.universe.containing(*p).clone(),
            Expr::Rotate(a, angle) => self.rotate_set(self.eval(a, binding)?.bits(), *angle),
            Expr::AllRotations(a) => self.all_rotations_set(self.eval(a, binding)?.bits()),
            Expr::Attach(a, b) => {
                let (a, b) = (self.eval(a, binding)?, self.eval(b, binding)?);
                self.attach_sets(a.bits(), b.bits(), None)?
            }
            Expr::AttachFixed(a, b, i) => {
                let (a, b) = (self.eval(a, binding)?, self.eval(b, binding)?);
                self.attach_sets(a.bits(), b.bits(), Some(*i))?
            }
            Expr::Map(body, over) => {
                let mut out = FixedBitSet::with_capacity(self.universe.len());
                for p in self.bound_prims(*over, binding)? {
                    out.union_with(self.eval(body, Some(p))?.bits());
                }
                out
            }
        };
        Ok(Extension::from_bits(bits))
    }

    fn bound_prims(&self, s: PrimSet, binding: Option<PrimId>) -> Result<Vec<PrimId>, DslError> {
        Ok(match s {
            PrimSet::One(p) => vec![p],
            PrimSet::All => (0..N_PRIMS as u8).map(PrimId).collect(),
            PrimSet::Var => vec![binding.ok_or_else(|| DslError::UnboundVariable {
                pos: 0,
                name: "x".into(),
            })?],
        })
    }

    fn primset(&self, s: PrimSet, binding: Option<PrimId>) -> Result<FixedBitSet, DslError> {
        let mut out = FixedBitSet::with_capacity(self.universe.len());
        for p in self.bound_prims(s, binding)? {
            out.insert(self.universe.base(p) as usize);
        }
        Ok(out)
    }

    /// Every member rotated by `angle`.
    pub fn rotate_set(&self, set: &FixedBitSet, angle: Angle) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.universe.len());
        for i in set.ones() {
            out.insert(self.universe.rotate(i as FigureId, angle) as usize);
        }
        out
    }

    pub fn all_rotations_set(&self, set: &FixedBitSet) -> FixedBitSet {
        let mut out = set.clone();
        for angle in [Angle::R90, Angle::R180, Angle::R270] {
            out.union_with(&self.rotate_set(set, angle));
        }
        out
    }

    /// Configurations of every member pair, or only the `index`-th (1-based,
    /// wrapping) configuration of each pair when an index is given.
    pub fn attach_sets(
        &self,
        a: &FixedBitSet,
        b: &FixedBitSet,
        index: Option<u8>,
    ) -> Result<FixedBitSet, DslError> {
        let u = self.universe;
        let pairs = a.count_ones(..) * b.count_ones(..);
        if pairs > self.pair_budget {
            return Err(DslError::EvaluationBudgetExceeded(self.pair_budget));
        }
        let mut out = FixedBitSet::with_capacity(u.len());
        for i in a.ones() {
            let room = u.max_parts().saturating_sub(u.part_count(i as FigureId));
            for j in b.ones() {
                if u.part_count(j as FigureId) > room {
                    continue;
                }
                let Some(configs) = u.attachments(i as FigureId, j as FigureId) else {
                    continue;
                };
                match index {
                    None => out.extend(configs.iter().flatten().map(|&f| f as usize)),
                    Some(_) if configs.is_empty() => {}
                    Some(k) => {
                        if let Some(f) = configs[(k as usize - 1) % configs.len()] {
                            out.insert(f as usize);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Whether the value of `e` depends on the innermost lambda binding.
fn uses_binding(e: &Expr) -> bool {
    match e {
        Expr::Set(s) => *s == PrimSet::Var,
        Expr::Has(_) => false,
        Expr::Map(_, over) => *over == PrimSet::Var,
        Expr::Rotate(a, _) | Expr::AllRotations(a) => uses_binding(a),
        Expr::Attach(a, b) | Expr::AttachFixed(a, b, _) => uses_binding(a) || uses_binding(b),
    }
}
