//! The concept language: syntax, grammar prior and set-valued evaluation.

mod ast;
mod eval;
mod grammar;
mod parse;

pub use ast::{ConceptProgram, Expr, PrimSet, MAX_CONFIG_INDEX};
pub use eval::{Evaluator, Extension, DEFAULT_PAIR_BUDGET};
pub use grammar::{
    derive, to_program, Choice, Derivation, ExpansionCounts, Grammar, Nonterminal, Slot,
    DEFAULT_DEPTH_CAP,
};
pub use parse::{parse_program, print_program};

use thiserror::Error;

/// Number of primitives a trial supplies (`p1` to `p4`).
pub const N_PRIMS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("{op} at byte {pos} takes {expected} arguments, found {found}")]
    Arity {
        pos: usize,
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("unbound variable {name:?} at byte {pos}")]
    UnboundVariable { pos: usize, name: String },
    #[error("unknown primitive {name:?} at byte {pos}")]
    UnknownPrimitive { pos: usize, name: String },
    #[error("ill-typed program: {0}")]
    IllTyped(String),
    #[error("program exceeds depth cap {0}")]
    DepthCapExceeded(u32),
    #[error("no alternative fits at derivation level {0}")]
    NoTerminalAlternative(u32),
    #[error("invalid grammar: {0}")]
    BadGrammar(String),
    #[error("evaluation exceeded the budget of {0} attachment pairs")]
    EvaluationBudgetExceeded(usize),
}
