//! Global types, local types and the sorts they exchange.
//!
//! Both type languages share the same recursion structure (`Loop`/`Recur`), so
//! substitution, unfolding, alpha-normalization and well-formedness are written
//! once against [`RecursiveType`] and reused for either kind.

mod display;
mod recursion;
mod wf;

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

pub use display::head_fragment;
pub use recursion::{alpha_normalize, free_vars, struct_eq, substitute, unfold, unfold_counted, RecursiveType};
pub use wf::{well_formed, AstPath, PathStep, Violation, WfError};

/// A protocol participant, identified by name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Role(String);

impl Role {
    pub fn new(name: impl Into<String>) -> Self {
        Role(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// Checks the identifier shape `[A-Za-z][A-Za-z0-9_]*`.
    pub fn is_valid_name(name: &str) -> bool {
        is_ident(name)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Role {
    fn from(s: &str) -> Self {
        Role::new(s)
    }
}

/// A recursion variable bound by `Loop`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecVar(String);

impl RecVar {
    pub fn new(name: impl Into<String>) -> Self {
        RecVar(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RecVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RecVar {
    fn from(s: &str) -> Self {
        RecVar::new(s)
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Payload schema carried by a sort.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    None,
    Int,
    String,
    /// A delegated session endpoint: the receiver continues `role` at type `local`.
    Endpoint {
        role: Role,
        local: Box<LocalType>,
    },
}

impl Payload {
    fn same_schema(&self, other: &Payload) -> bool {
        match (self, other) {
            (Payload::Endpoint { role: r1, local: l1 }, Payload::Endpoint { role: r2, local: l2 }) => {
                r1 == r2 && struct_eq(l1.as_ref(), l2.as_ref())
            }
            (Payload::Endpoint { .. }, _) | (_, Payload::Endpoint { .. }) => false,
            _ => true,
        }
    }
}

/// A message sort. Equality is nominal on the name; endpoint sorts are
/// additionally compared structurally on their delegated role and local type.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sort {
    pub name: String,
    pub payload: Payload,
}

impl Sort {
    pub fn new(name: impl Into<String>, payload: Payload) -> Self {
        Sort { name: name.into(), payload }
    }

    /// A sort without payload.
    pub fn unit(name: impl Into<String>) -> Self {
        Sort::new(name, Payload::None)
    }

    pub fn int(name: impl Into<String>) -> Self {
        Sort::new(name, Payload::Int)
    }

    pub fn string(name: impl Into<String>) -> Self {
        Sort::new(name, Payload::String)
    }

    pub fn endpoint(name: impl Into<String>, role: Role, local: LocalType) -> Self {
        Sort::new(name, Payload::Endpoint { role, local: Box::new(local) })
    }
}

impl PartialEq for Sort {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.payload.same_schema(&other.payload)
    }
}

impl Eq for Sort {}

impl Hash for Sort {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// An ordered list of `(sort, continuation)` pairs.
pub type Branches<T> = Vec<(Sort, T)>;

/// Returns the continuation paired with `sort`, if the branches offer it.
pub fn branch_lookup<'a, T>(branches: &'a [(Sort, T)], sort: &Sort) -> Option<&'a T> {
    branches.iter().find(|(s, _)| s == sort).map(|(_, t)| t)
}

/// Like [`branch_lookup`], matching on the sort name only.
pub fn branch_lookup_name<'a, T>(branches: &'a [(Sort, T)], name: &str) -> Option<&'a (Sort, T)> {
    branches.iter().find(|(s, _)| s.name == name)
}

/// A protocol seen from a bird's-eye view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GlobalType {
    Com { from: Role, to: Role, branches: Branches<GlobalType> },
    End,
    Loop { var: RecVar, body: Box<GlobalType> },
    Recur { var: RecVar },
}

impl GlobalType {
    pub fn com(from: impl Into<Role>, to: impl Into<Role>, branches: Branches<GlobalType>) -> Self {
        GlobalType::Com { from: from.into(), to: to.into(), branches }
    }

    pub fn rec(var: impl Into<RecVar>, body: GlobalType) -> Self {
        GlobalType::Loop { var: var.into(), body: Box::new(body) }
    }

    pub fn var(var: impl Into<RecVar>) -> Self {
        GlobalType::Recur { var: var.into() }
    }

    /// Roles in order of first appearance (sender before receiver).
    pub fn roles(&self) -> Vec<Role> {
        fn walk(g: &GlobalType, out: &mut Vec<Role>) {
            match g {
                GlobalType::Com { from, to, branches } => {
                    for r in [from, to] {
                        if !out.contains(r) {
                            out.push(r.clone());
                        }
                    }
                    for (_, cont) in branches {
                        walk(cont, out);
                    }
                }
                GlobalType::Loop { body, .. } => walk(body, out),
                GlobalType::End | GlobalType::Recur { .. } => {}
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("global types always serialize")
    }
}

impl From<String> for Role {
    fn from(s: String) -> Self {
        Role(s)
    }
}

impl From<&Role> for Role {
    fn from(r: &Role) -> Self {
        r.clone()
    }
}

/// One role's view of a protocol.
///
/// `Send { from, to, .. }` is performed by `from`; `Recv { from, to, .. }` is
/// performed by `to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LocalType {
    Send { from: Role, to: Role, branches: Branches<LocalType> },
    Recv { from: Role, to: Role, branches: Branches<LocalType> },
    End,
    Loop { var: RecVar, body: Box<LocalType> },
    Recur { var: RecVar },
}

impl LocalType {
    pub fn send(from: impl Into<Role>, to: impl Into<Role>, branches: Branches<LocalType>) -> Self {
        LocalType::Send { from: from.into(), to: to.into(), branches }
    }

    pub fn recv(from: impl Into<Role>, to: impl Into<Role>, branches: Branches<LocalType>) -> Self {
        LocalType::Recv { from: from.into(), to: to.into(), branches }
    }

    pub fn rec(var: impl Into<RecVar>, body: LocalType) -> Self {
        LocalType::Loop { var: var.into(), body: Box::new(body) }
    }

    pub fn var(var: impl Into<RecVar>) -> Self {
        LocalType::Recur { var: var.into() }
    }

    /// The role on the other side of the head action, if any.
    pub fn peer(&self) -> Option<&Role> {
        match self {
            LocalType::Send { to, .. } => Some(to),
            LocalType::Recv { from, .. } => Some(from),
            _ => None,
        }
    }

    /// Every role mentioned by an action anywhere in the type.
    pub fn mentioned_roles(&self) -> BTreeSet<Role> {
        fn walk(l: &LocalType, out: &mut BTreeSet<Role>) {
            match l {
                LocalType::Send { from, to, branches } | LocalType::Recv { from, to, branches } => {
                    out.insert(from.clone());
                    out.insert(to.clone());
                    for (_, c) in branches {
                        walk(c, out);
                    }
                }
                LocalType::Loop { body, .. } => walk(body, out),
                LocalType::End | LocalType::Recur { .. } => {}
            }
        }
        let mut out = BTreeSet::new();
        walk(self, &mut out);
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("local types always serialize")
    }
}
