//! Surface syntax: parenthesized prefix expressions.
//!
//! ```text
//! expr := p1 | p2 | p3 | p4 | S | <lambda variable>
//!       | (all-rotations expr)          ; root only
//!       | (rotate expr angle)            ; angle in {0, 90, 180, 270}
//!       | (attach expr expr)
//!       | (attach* expr expr index)      ; index in 1..=8
//!       | (map (lambda var expr) primset)
//!       | (has prim)
//! ```

use crate::geometry::{Angle, PrimId};

use super::ast::{ConceptProgram, Expr, PrimSet, MAX_CONFIG_INDEX};
use super::{DslError, N_PRIMS};

#[derive(Debug)]
enum Sexp<'a> {
    Atom(&'a str, usize),
    List(Vec<Sexp<'a>>, usize),
}

impl Sexp<'_> {
    fn pos(&self) -> usize {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn tokenize(text: &str) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((&text[s..i], s));
            }
            if !ch.is_whitespace() {
                out.push((&text[i..i + 1], i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((&text[s..], s));
    }
    out
}

fn read<'a>(tokens: &[(&'a str, usize)], i: &mut usize, len: usize) -> Result<Sexp<'a>, DslError> {
    let Some(&(tok, pos)) = tokens.get(*i) else {
        return Err(DslError::Syntax {
            pos: len,
            msg: "unexpected end of input".into(),
        });
    };
    *i += 1;
    match tok {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*i) {
                    None => {
                        return Err(DslError::Syntax {
                            pos,
                            msg: "unclosed parenthesis".into(),
                        })
                    }
                    Some(&(")", _)) => {
                        *i += 1;
                        return Ok(Sexp::List(items, pos));
                    }
                    Some(_) => items.push(read(tokens, i, len)?),
                }
            }
        }
        ")" => Err(DslError::Syntax {
            pos,
            msg: "unexpected ')'".into(),
        }),
        atom => Ok(Sexp::Atom(atom, pos)),
    }
}

const KEYWORDS: [&str; 8] = [
    "all-rotations",
    "rotate",
    "attach",
    "attach*",
    "map",
    "lambda",
    "has",
    "S",
];

fn parse_prim(atom: &str, pos: usize) -> Result<Option<PrimId>, DslError> {
    if !atom.starts_with('p') || atom.len() < 2 || !atom[1..].chars().all(|c| c.is_ascii_digit()) {
        return Ok(None);
    }
    match PrimId::parse(atom) {
        Some(p) if p.index() < N_PRIMS => Ok(Some(p)),
        _ => Err(DslError::UnknownPrimitive {
            pos,
            name: atom.to_string(),
        }),
    }
}

struct Scope<'a> {
    /// Lambda variables, innermost last.
    vars: Vec<&'a str>,
}

impl<'a> Scope<'a> {
    fn primset(&self, s: &Sexp<'a>) -> Result<PrimSet, DslError> {
        match s {
            Sexp::Atom("S", _) => Ok(PrimSet::All),
            Sexp::Atom(a, pos) => {
                if let Some(p) = parse_prim(a, *pos)? {
                    return Ok(PrimSet::One(p));
                }
                match self.vars.iter().rposition(|v| v == a) {
                    Some(i) if i + 1 == self.vars.len() => Ok(PrimSet::Var),
                    Some(_) => Err(DslError::IllTyped(format!(
                        "variable {a:?} at {pos} is shadowed by an inner lambda"
                    ))),
                    None if KEYWORDS.contains(a) => Err(DslError::Syntax {
                        pos: *pos,
                        msg: format!("{a:?} cannot be used as a value"),
                    }),
                    None if a.parse::<i64>().is_ok() => Err(DslError::Syntax {
                        pos: *pos,
                        msg: format!("number {a} where an expression was expected"),
                    }),
                    None => Err(DslError::UnboundVariable {
                        pos: *pos,
                        name: a.to_string(),
                    }),
                }
            }
            Sexp::List(_, pos) => Err(DslError::Syntax {
                pos: *pos,
                msg: "expected a primitive, S or a variable".into(),
            }),
        }
    }

    fn expr(&mut self, s: &Sexp<'a>) -> Result<Expr, DslError> {
        let (items, pos) = match s {
            Sexp::Atom(..) => return Ok(Expr::Set(self.primset(s)?)),
            Sexp::List(items, pos) => (items, *pos),
        };
        let Some(Sexp::Atom(head, _)) = items.first() else {
            return Err(DslError::Syntax {
                pos,
                msg: "expected an operator".into(),
            });
        };
        let args = &items[1..];
        let arity = |expected: usize| -> Result<(), DslError> {
            if args.len() == expected {
                Ok(())
            } else {
                Err(DslError::Arity {
                    pos,
                    op: head.to_string(),
                    expected,
                    found: args.len(),
                })
            }
        };
        match *head {
            "all-rotations" => {
                arity(1)?;
                Ok(Expr::AllRotations(Box::new(self.expr(&args[0])?)))
            }
            "rotate" => {
                arity(2)?;
                let e = self.expr(&args[0])?;
                let deg = integer(&args[1])?;
                let angle = Angle::from_degrees(deg as i32).map_err(|_| DslError::Syntax {
                    pos: args[1].pos(),
                    msg: format!("invalid angle {deg}"),
                })?;
                Ok(Expr::Rotate(Box::new(e), angle))
            }
            "attach" => {
                arity(2)?;
                Ok(Expr::Attach(
                    Box::new(self.expr(&args[0])?),
                    Box::new(self.expr(&args[1])?),
                ))
            }
            "attach*" => {
                arity(3)?;
                let a = self.expr(&args[0])?;
                let b = self.expr(&args[1])?;
                let i = integer(&args[2])?;
                if i < 1 || i > MAX_CONFIG_INDEX as i64 {
                    return Err(DslError::Syntax {
                        pos: args[2].pos(),
                        msg: format!("configuration index {i} outside 1..={MAX_CONFIG_INDEX}"),
                    });
                }
                Ok(Expr::AttachFixed(Box::new(a), Box::new(b), i as u8))
            }
            "map" => {
                arity(2)?;
                let over = self.primset(&args[1])?;
                let (var, body) = match &args[0] {
                    Sexp::List(l, lpos) => match &l[..] {
                        [Sexp::Atom("lambda", _), Sexp::Atom(v, vpos), body] => {
                            if KEYWORDS.contains(v) || parse_prim(v, *vpos)?.is_some() {
                                return Err(DslError::Syntax {
                                    pos: *vpos,
                                    msg: format!("{v:?} cannot name a variable"),
                                });
                            }
                            (*v, body)
                        }
                        [Sexp::Atom("lambda", _), ..] => {
                            return Err(DslError::Arity {
                                pos: *lpos,
                                op: "lambda".into(),
                                expected: 2,
                                found: l.len() - 1,
                            })
                        }
                        _ => {
                            return Err(DslError::Syntax {
                                pos: *lpos,
                                msg: "expected (lambda var body)".into(),
                            })
                        }
                    },
                    other => {
                        return Err(DslError::Syntax {
                            pos: other.pos(),
                            msg: "expected (lambda var body)".into(),
                        })
                    }
                };
                self.vars.push(var);
                let body = self.expr(body);
                self.vars.pop();
                Ok(Expr::Map(Box::new(body?), over))
            }
            "has" => {
                arity(1)?;
                match &args[0] {
                    Sexp::Atom(a, p) => match parse_prim(a, *p)? {
                        Some(prim) => Ok(Expr::Has(prim)),
                        None => Err(DslError::Syntax {
                            pos: *p,
                            msg: "has takes a single primitive".into(),
                        }),
                    },
                    other => Err(DslError::Syntax {
                        pos: other.pos(),
                        msg: "has takes a single primitive".into(),
                    }),
                }
            }
            other => Err(DslError::Syntax {
                pos,
                msg: format!("unknown operator {other:?}"),
            }),
        }
    }
}

fn integer(s: &Sexp) -> Result<i64, DslError> {
    match s {
        Sexp::Atom(a, pos) => a.parse().map_err(|_| DslError::Syntax {
            pos: *pos,
            msg: format!("expected an integer, found {a:?}"),
        }),
        Sexp::List(_, pos) => Err(DslError::Syntax {
            pos: *pos,
            msg: "expected an integer".into(),
        }),
    }
}

/// Parse program text into a well-typed program.
pub fn parse_program(text: &str) -> Result<ConceptProgram, DslError> {
    let tokens = tokenize(text);
    let mut i = 0;
    let sexp = read(&tokens, &mut i, text.len())?;
    if let Some(&(_, pos)) = tokens.get(i) {
        return Err(DslError::Syntax {
            pos,
            msg: "trailing input".into(),
        });
    }
    let expr = Scope { vars: Vec::new() }.expr(&sexp)?;
    ConceptProgram::new(expr)
}

/// Canonical text of a program.
pub fn print_program(p: &ConceptProgram) -> String {
    p.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for text in [
            "(rotate (attach* p1 p2 1) 180)",
            "(map (lambda x (attach x x)) S)",
            "(all-rotations (attach (has p3) (rotate p4 90)))",
            "(map (lambda x (map (lambda x (attach x p1)) x)) S)",
            "S",
        ] {
            let p = parse_program(text).unwrap();
            assert_eq!(print_program(&p), text);
            assert_eq!(parse_program(&print_program(&p)).unwrap(), p);
        }
    }

    #[test]
    fn whitespace_and_names_are_normalized() {
        let p = parse_program("  ( map\n(lambda y (attach  y y))   S )").unwrap();
        assert_eq!(print_program(&p), "(map (lambda x (attach x x)) S)");
        assert!(matches!(p.root(), Expr::Map(_, PrimSet::All)));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_program("(attach x x)"),
            Err(DslError::UnboundVariable { pos: 8, .. })
        ));
        assert!(matches!(
            parse_program("(attach p1)"),
            Err(DslError::Arity {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(
            parse_program("(attach p1 p2"),
            Err(DslError::Syntax { pos: 0, .. })
        ));
        assert!(matches!(
            parse_program("(rotate p1 45)"),
            Err(DslError::Syntax { pos: 11, .. })
        ));
        assert!(matches!(
            parse_program("(attach* p1 p2 9)"),
            Err(DslError::Syntax { .. })
        ));
        assert!(matches!(
            parse_program("(has S)"),
            Err(DslError::Syntax { .. })
        ));
        assert!(matches!(
            parse_program("p5"),
            Err(DslError::UnknownPrimitive { pos: 0, .. })
        ));
        assert!(matches!(
            parse_program("p1 p2"),
            Err(DslError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(
            parse_program("(rotate (all-rotations p1) 90)"),
            Err(DslError::IllTyped(_))
        ));
        assert!(matches!(
            parse_program("(map (lambda y (map (lambda x (attach x y)) S)) S)"),
            Err(DslError::IllTyped(_))
        ));
        assert!(matches!(
            parse_program("(frob p1)"),
            Err(DslError::Syntax { .. })
        ));
    }
}
