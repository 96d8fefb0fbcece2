use std::fmt;

use crate::geometry::{Angle, PrimId};

use super::DslError;

/// Highest configuration index an `attach*` node may carry.
pub const MAX_CONFIG_INDEX: u8 = 8;

/// A set of primitives: one named primitive, all of them (`S`), or the lambda variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimSet {
    One(PrimId),
    All,
    Var,
}

/// Set-valued expression in the concept language.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    /// Union of the four rotations of the child. Only valid at the root.
    AllRotations(Box<Expr>),
    Rotate(Box<Expr>, Angle),
    /// Every configuration of each pair of members.
    Attach(Box<Expr>, Box<Expr>),
    /// The `index`-th configuration (1-based, wrapping) of each pair of members.
    AttachFixed(Box<Expr>, Box<Expr>, u8),
    /// `(map (lambda x body) over)`.
    Map(Box<Expr>, PrimSet),
    /// Every figure with the primitive as a part.
    Has(PrimId),
    Set(PrimSet),
}

impl Expr {
    pub fn node_count(&self) -> usize {
        match self {
            Expr::AllRotations(e) | Expr::Rotate(e, _) | Expr::Map(e, _) => 1 + e.node_count(),
            Expr::Attach(a, b) | Expr::AttachFixed(a, b, _) => 1 + a.node_count() + b.node_count(),
            Expr::Has(_) | Expr::Set(_) => 1,
        }
    }

    fn check(&self, root: bool, in_body: bool) -> Result<(), DslError> {
        match self {
            Expr::AllRotations(e) => {
                if !root {
                    return Err(DslError::IllTyped(
                        "all-rotations is only allowed at the root".into(),
                    ));
                }
                e.check(false, in_body)
            }
            Expr::Rotate(e, _) => e.check(false, in_body),
            Expr::Attach(a, b) => {
                a.check(false, in_body)?;
                b.check(false, in_body)
            }
            Expr::AttachFixed(a, b, i) => {
                if *i == 0 || *i > MAX_CONFIG_INDEX {
                    return Err(DslError::IllTyped(format!(
                        "configuration index {i} outside 1..={MAX_CONFIG_INDEX}"
                    )));
                }
                a.check(false, in_body)?;
                b.check(false, in_body)
            }
            Expr::Map(body, over) => {
                if *over == PrimSet::Var && !in_body {
                    return Err(DslError::UnboundVariable {
                        pos: 0,
                        name: "x".into(),
                    });
                }
                body.check(false, true)
            }
            Expr::Has(_) => Ok(()),
            Expr::Set(PrimSet::Var) if !in_body => Err(DslError::UnboundVariable {
                pos: 0,
                name: "x".into(),
            }),
            Expr::Set(_) => Ok(()),
        }
    }
}

impl fmt::Display for PrimSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimSet::One(p) => write!(f, "{p}"),
            PrimSet::All => write!(f, "S"),
            PrimSet::Var => write!(f, "x"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::AllRotations(e) => write!(f, "(all-rotations {e})"),
            Expr::Rotate(e, a) => write!(f, "(rotate {e} {a})"),
            Expr::Attach(a, b) => write!(f, "(attach {a} {b})"),
            Expr::AttachFixed(a, b, i) => write!(f, "(attach* {a} {b} {i})"),
            Expr::Map(body, over) => write!(f, "(map (lambda x {body}) {over})"),
            Expr::Has(p) => write!(f, "(has {p})"),
            Expr::Set(s) => write!(f, "{s}"),
        }
    }
}

/// A well-typed concept program.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptProgram {
    root: Expr,
}

impl ConceptProgram {
    pub fn new(root: Expr) -> Result<ConceptProgram, DslError> {
        root.check(true, false)?;
        Ok(ConceptProgram { root })
    }

    pub(crate) fn new_unchecked(root: Expr) -> ConceptProgram {
        ConceptProgram { root }
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn into_root(self) -> Expr {
        self.root
    }
}

impl fmt::Display for ConceptProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl std::str::FromStr for ConceptProgram {
    type Err = DslError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        super::parse_program(s)
    }
}
