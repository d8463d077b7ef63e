//! The `.mpst` protocol language: sort declarations, (generic) global type
//! definitions, local type assertions and process definitions in one file.
//!
//! ```text
//! sort Propose(int);
//! global U[P: role, Q: role, G: protocol] =
//!   P -> Q : { Accept . Q -> P : Confirm . end, Reject . end, Propose . G };
//! global S = A -> B : Propose . rec X . U[B, A, U[A, B, X]];
//! local SB of S @ B = A -> B ? Propose . rec X . B -> A ! { ... };
//! proc bob plays B in S { recv A { Propose(v) -> ... } }
//! ```

mod elaborate;
mod lexer;
mod parser;
mod render;

use std::fmt;
use std::ops::Range;

use thiserror::Error;

use crate::typecheck::{Pos, ProcessTerm};

pub use elaborate::{elaborate_local, instantiate, instantiate_ref, resolve_sort, roots, Arg};
pub use parser::parse_protocol_file;
pub use render::{render_file, render_type};

/// How two roles are connected in a type expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arrow {
    /// `p -> q : ...`
    Global,
    /// `p -> q ! ...`
    Send,
    /// `p -> q ? ...`
    Recv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchExpr {
    pub pos: Pos,
    pub sort: String,
    pub cont: TypeExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeExpr {
    Com {
        pos: Pos,
        arrow: Arrow,
        from: String,
        to: String,
        branches: Vec<BranchExpr>,
    },
    End {
        pos: Pos,
    },
    Rec {
        pos: Pos,
        var: String,
        body: Box<TypeExpr>,
    },
    /// A recursion variable, a parameter, or a use of a definition.
    Ref {
        pos: Pos,
        name: String,
        args: Vec<TypeExpr>,
    },
}

impl TypeExpr {
    pub fn pos(&self) -> Pos {
        match self {
            TypeExpr::Com { pos, .. }
            | TypeExpr::End { pos }
            | TypeExpr::Rec { pos, .. }
            | TypeExpr::Ref { pos, .. } => *pos,
        }
    }

    /// Structural equality ignoring positions.
    pub fn same_shape(&self, other: &TypeExpr) -> bool {
        match (self, other) {
            (
                TypeExpr::Com { arrow: a1, from: f1, to: t1, branches: b1, .. },
                TypeExpr::Com { arrow: a2, from: f2, to: t2, branches: b2, .. },
            ) => {
                a1 == a2
                    && f1 == f2
                    && t1 == t2
                    && b1.len() == b2.len()
                    && b1.iter().zip(b2).all(|(x, y)| x.sort == y.sort && x.cont.same_shape(&y.cont))
            }
            (TypeExpr::End { .. }, TypeExpr::End { .. }) => true,
            (TypeExpr::Rec { var: v1, body: b1, .. }, TypeExpr::Rec { var: v2, body: b2, .. }) => {
                v1 == v2 && b1.same_shape(b2)
            }
            (TypeExpr::Ref { name: n1, args: a1, .. }, TypeExpr::Ref { name: n2, args: a2, .. }) => {
                n1 == n2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| x.same_shape(y))
            }
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PayloadExpr {
    None,
    Int,
    String,
    /// `endpoint[R, G]`: role `R` of protocol `G`.
    Endpoint {
        role: String,
        proto: TypeExpr,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortDecl {
    pub pos: Pos,
    pub name: String,
    pub payload: PayloadExpr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Role,
    Protocol,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamKind::Role => "role",
            ParamKind::Protocol => "protocol",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub kind: ParamKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalDef {
    pub pos: Pos,
    pub name: String,
    pub params: Vec<Param>,
    pub body: TypeExpr,
}

/// `local N of G @ r = L;` asserts that `L` is the projection of `G` onto `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalDef {
    pub pos: Pos,
    pub name: String,
    pub of: TypeExpr,
    pub role: String,
    pub body: TypeExpr,
}

/// `R in G as x`: the process plays `R` in a session of `G` through variable `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionSpec {
    pub pos: Pos,
    pub role: String,
    pub proto: TypeExpr,
    pub var: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcDef {
    pub pos: Pos,
    pub name: String,
    pub sessions: Vec<SessionSpec>,
    pub body: ProcessTerm,
    /// Byte range of the whole definition in the source text.
    pub span: Range<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProtocolFile {
    pub sorts: Vec<SortDecl>,
    pub globals: Vec<GlobalDef>,
    pub locals: Vec<LocalDef>,
    pub procs: Vec<ProcDef>,
}

impl ProtocolFile {
    pub fn global(&self, name: &str) -> Option<&GlobalDef> {
        self.globals.iter().find(|g| g.name == name)
    }

    pub fn sort(&self, name: &str) -> Option<&SortDecl> {
        self.sorts.iter().find(|s| s.name == name)
    }

    pub fn proc(&self, name: &str) -> Option<&ProcDef> {
        self.procs.iter().find(|p| p.name == name)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SurfaceError {
    #[error("{pos}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax { pos: Pos, expected: Vec<String>, found: String },
    #[error("{pos}: {message}")]
    Lex { pos: Pos, message: String },
    #[error("{pos}: duplicate {kind} `{name}`")]
    Duplicate { pos: Pos, kind: &'static str, name: String },
    #[error("{pos}: unbound name `{name}`")]
    Unbound { pos: Pos, name: String },
    #[error("{pos}: `{name}` expects {expected} argument(s), found {found}")]
    Arity { pos: Pos, name: String, expected: usize, found: usize },
    #[error("{pos}: parameter `{param}` expects a {kind}")]
    Kind { pos: Pos, param: String, kind: ParamKind },
    #[error("{pos}: definition `{name}` refers to itself")]
    Cyclic { pos: Pos, name: String },
    #[error("{pos}: {message}")]
    Arrow { pos: Pos, message: String },
    #[error("{pos}: invalid endpoint sort `{sort}`: {message}")]
    EndpointSort { pos: Pos, sort: String, message: String },
}

impl SurfaceError {
    pub fn pos(&self) -> Pos {
        match self {
            SurfaceError::Syntax { pos, .. }
            | SurfaceError::Lex { pos, .. }
            | SurfaceError::Duplicate { pos, .. }
            | SurfaceError::Unbound { pos, .. }
            | SurfaceError::Arity { pos, .. }
            | SurfaceError::Kind { pos, .. }
            | SurfaceError::Cyclic { pos, .. }
            | SurfaceError::Arrow { pos, .. }
            | SurfaceError::EndpointSort { pos, .. } => *pos,
        }
    }

    pub fn is_syntax(&self) -> bool {
        matches!(self, SurfaceError::Syntax { .. } | SurfaceError::Lex { .. } | SurfaceError::Duplicate { .. })
    }
}
