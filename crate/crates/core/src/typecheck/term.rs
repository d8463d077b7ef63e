use std::fmt;

use serde::Serialize;

use crate::ast::Role;

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Str(String),
    /// A data variable, or a session variable when it names one.
    Var(String),
    /// Explicit reference to a session variable (a delegation payload).
    SessionRef(String),
    NewSort {
        sort: String,
        args: Vec<Expr>,
    },
    Sub(Box<Expr>, Box<Expr>),
    Lt(Box<Expr>, Box<Expr>),
    /// `v.x`: the payload of a received message.
    Field {
        base: Box<Expr>,
        field: String,
    },
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Str(s) => write!(f, "{s:?}"),
            Expr::Var(v) | Expr::SessionRef(v) => f.write_str(v),
            Expr::NewSort { sort, args } if args.is_empty() => f.write_str(sort),
            Expr::NewSort { sort, args } => {
                write!(f, "{sort}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Sub(a, b) => write!(f, "{} - {}", Paren(a, 1), Paren(b, 2)),
            Expr::Lt(a, b) => write!(f, "{} < {}", Paren(a, 1), Paren(b, 1)),
            Expr::Field { base, field } => write!(f, "{}.{field}", Paren(base, 3)),
        }
    }
}

/// Parenthesizes `e` when its binding strength is below `min`.
struct Paren<'a>(&'a Expr, u8);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let strength = match self.0 {
            Expr::Lt(..) => 0,
            Expr::Sub(..) => 1,
            _ => 3,
        };
        if strength < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// One arm of a receive: `Sort(var) -> body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecvArm {
    pub pos: Pos,
    pub sort: String,
    pub var: Option<String>,
    pub body: ProcessTerm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Send {
        session: String,
        to: Role,
        payload: Expr,
        cont: Box<ProcessTerm>,
    },
    Recv {
        session: String,
        from: Role,
        arms: Vec<RecvArm>,
    },
    Loop {
        session: String,
        label: String,
        body: Box<ProcessTerm>,
    },
    /// Jumps back to the loop `label`. With a continuation, the iteration runs
    /// to completion first and `cont` executes afterwards.
    Recur {
        label: String,
        session: Option<String>,
        cont: Option<Box<ProcessTerm>>,
    },
    End,
    If {
        cond: Expr,
        then: Box<ProcessTerm>,
        els: Box<ProcessTerm>,
    },
    Let {
        name: String,
        value: Expr,
        cont: Box<ProcessTerm>,
    },
}

/// A process term with the position of its first token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessTerm {
    pub pos: Pos,
    pub term: Term,
}

impl ProcessTerm {
    pub fn new(pos: Pos, term: Term) -> Self {
        ProcessTerm { pos, term }
    }

    pub fn end() -> Self {
        ProcessTerm::new(Pos::default(), Term::End)
    }

    /// Structural equality ignoring positions.
    pub fn same_shape(&self, other: &ProcessTerm) -> bool {
        use Term::*;
        match (&self.term, &other.term) {
            (
                Send { session: s1, to: t1, payload: p1, cont: c1 },
                Send { session: s2, to: t2, payload: p2, cont: c2 },
            ) => s1 == s2 && t1 == t2 && p1 == p2 && c1.same_shape(c2),
            (Recv { session: s1, from: f1, arms: a1 }, Recv { session: s2, from: f2, arms: a2 }) => {
                s1 == s2
                    && f1 == f2
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| x.sort == y.sort && x.var == y.var && x.body.same_shape(&y.body))
            }
            (Loop { session: s1, label: l1, body: b1 }, Loop { session: s2, label: l2, body: b2 }) => {
                s1 == s2 && l1 == l2 && b1.same_shape(b2)
            }
            (Recur { label: l1, session: s1, cont: c1 }, Recur { label: l2, session: s2, cont: c2 }) => {
                l1 == l2
                    && s1 == s2
                    && match (c1, c2) {
                        (None, None) => true,
                        (Some(a), Some(b)) => a.same_shape(b),
                        _ => false,
                    }
            }
            (End, End) => true,
            (If { cond: e1, then: t1, els: f1 }, If { cond: e2, then: t2, els: f2 }) => {
                e1 == e2 && t1.same_shape(t2) && f1.same_shape(f2)
            }
            (Let { name: n1, value: v1, cont: c1 }, Let { name: n2, value: v2, cont: c2 }) => {
                n1 == n2 && v1 == v2 && c1.same_shape(c2)
            }
            _ => false,
        }
    }
}
