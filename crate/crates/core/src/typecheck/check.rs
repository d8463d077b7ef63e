use std::collections::BTreeMap;
use std::fmt;

use crate::ast::{alpha_normalize, branch_lookup_name, head_fragment, unfold, LocalType, Payload, Role, Sort};

use super::{Diagnostic, ErrorClass, Expr, Pos, ProcessTerm, Term};

use ErrorClass::*;

/// Types of data expressions.
#[derive(Clone, Debug, PartialEq)]
pub enum DataType {
    Int,
    Str,
    Bool,
    /// A message value of the given sort.
    Sort(Sort),
    /// A session endpoint playing `role` at type `local`.
    Endpoint {
        role: Role,
        local: LocalType,
    },
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataType::Int => f.write_str("int"),
            DataType::Str => f.write_str("string"),
            DataType::Bool => f.write_str("bool"),
            DataType::Sort(s) => write!(f, "sort {}", s.name),
            DataType::Endpoint { role, .. } => write!(f, "endpoint of {role}"),
        }
    }
}

impl DataType {
    fn as_int(&self) -> bool {
        matches!(self, DataType::Int) || matches!(self, DataType::Sort(s) if matches!(s.payload, Payload::Int))
    }
}

#[derive(Clone, Debug)]
struct Slot {
    role: Role,
    ty: LocalType,
    /// Bumped by every action; names stamped with an older value are stale.
    gen: u32,
    live: bool,
}

#[derive(Clone, Debug)]
struct LoopFrame {
    label: String,
    slot: usize,
    entry: LocalType,
    others: Vec<(usize, LocalType)>,
}

/// The typing environment: linear session resources, the names bound to
/// them, data variables, and the enclosing loops.
#[derive(Clone, Debug, Default)]
pub struct TypingEnv {
    slots: Vec<Slot>,
    names: BTreeMap<String, (usize, u32)>,
    data: BTreeMap<String, DataType>,
    loops: Vec<LoopFrame>,
}

impl TypingEnv {
    pub fn new() -> Self {
        TypingEnv::default()
    }

    /// Binds `name` to a fresh session resource.
    pub fn with_session(mut self, name: impl Into<String>, role: Role, ty: LocalType) -> Self {
        self.add_session(name.into(), role, ty);
        self
    }

    pub fn with_data(mut self, name: impl Into<String>, ty: DataType) -> Self {
        self.data.insert(name.into(), ty);
        self
    }

    fn add_session(&mut self, name: String, role: Role, ty: LocalType) {
        self.slots.push(Slot { role, ty, gen: 0, live: true });
        self.names.insert(name, (self.slots.len() - 1, 0));
    }

    /// Current type of a live session name.
    pub fn session_type(&self, name: &str) -> Option<&LocalType> {
        let (i, gen) = self.names.get(name)?;
        let slot = &self.slots[*i];
        (slot.live && slot.gen == *gen).then_some(&slot.ty)
    }

    fn advance(&mut self, name: &str, slot: usize, ty: LocalType) {
        let s = &mut self.slots[slot];
        s.ty = ty;
        s.gen += 1;
        self.names.insert(name.to_string(), (slot, s.gen));
    }

    fn consume(&mut self, slot: usize) {
        let s = &mut self.slots[slot];
        s.live = false;
        s.gen += 1;
    }
}

enum Use {
    Live(usize),
    Stale,
    Unbound,
}

/// Sort declarations visible to the checker, for `NewSort` expressions.
pub type SortTable = BTreeMap<String, Sort>;

/// Checks `p` against the sessions in `env`. Each control path stops at
/// its first error; all paths are checked.
pub fn check_process(env: &TypingEnv, p: &ProcessTerm, sorts: &SortTable) -> Result<(), Vec<Diagnostic>> {
    let mut c = Checker { sorts, diags: Vec::new() };
    c.process(env.clone(), p);
    if c.diags.is_empty() {
        Ok(())
    } else {
        Err(c.diags)
    }
}

/// Type of a data expression. Session names type as endpoints.
pub fn check_expr(env: &TypingEnv, e: &Expr, sorts: &SortTable, pos: Pos) -> Result<DataType, Diagnostic> {
    Checker { sorts, diags: Vec::new() }.expr(env, e, pos)
}

struct Checker<'a> {
    sorts: &'a SortTable,
    diags: Vec<Diagnostic>,
}

fn norm(t: &LocalType) -> LocalType {
    alpha_normalize(&unfold(t))
}

impl Checker<'_> {
    fn lookup(&self, env: &TypingEnv, name: &str) -> Use {
        match env.names.get(name) {
            None => Use::Unbound,
            Some((i, gen)) => {
                let s = &env.slots[*i];
                if s.live && s.gen == *gen {
                    Use::Live(*i)
                } else {
                    Use::Stale
                }
            }
        }
    }

    fn session(&mut self, env: &TypingEnv, name: &str, pos: Pos) -> Option<usize> {
        match self.lookup(env, name) {
            Use::Live(i) => Some(i),
            Use::Stale => {
                self.diags.push(Diagnostic::mismatch(
                    LinearityReuse,
                    pos,
                    "a live session",
                    format!("`{name}`, already used"),
                ));
                None
            }
            Use::Unbound => {
                self.diags.push(Diagnostic::mismatch(UnboundVariable, pos, "a session variable", format!("`{name}`")));
                None
            }
        }
    }

    fn process(&mut self, mut env: TypingEnv, p: &ProcessTerm) {
        let pos = p.pos;
        match &p.term {
            Term::End => {
                for slot in env.slots.iter().filter(|s| s.live) {
                    let ty = unfold(&slot.ty);
                    if ty != LocalType::End {
                        self.diags.push(Diagnostic::mismatch(
                            NonTerminatedSession,
                            pos,
                            format!("{} (session of {})", head_fragment(&ty), slot.role),
                            "end",
                        ));
                    }
                }
            }
            Term::Send { session, to, payload, cont } => {
                let Some(i) = self.session(&env, session, pos) else { return };
                let me = env.slots[i].role.clone();
                let ty = unfold(&env.slots[i].ty);
                let LocalType::Send { to: peer, branches, .. } = &ty else {
                    let found = format!("{me} -> {to} ! {payload}");
                    self.diags.push(Diagnostic::mismatch(WrongActionKind, pos, head_fragment(&ty), found));
                    return;
                };
                if peer != to {
                    let found = format!("{me} -> {to} ! {payload}");
                    self.diags.push(Diagnostic::mismatch(WrongPeer, pos, head_fragment(&ty), found));
                    return;
                }
                let Some((branch, delegated)) = self.select_branch(&env, i, &ty, branches, payload, pos) else {
                    return;
                };
                let next = branches[branch].1.clone();
                if let Some(d) = delegated {
                    env.consume(d);
                }
                env.advance(session, i, next);
                self.process(env, cont);
            }
            Term::Recv { session, from, arms } => {
                let Some(i) = self.session(&env, session, pos) else { return };
                let me = env.slots[i].role.clone();
                let ty = unfold(&env.slots[i].ty);
                let arm_names: Vec<&str> = arms.iter().map(|a| a.sort.as_str()).collect();
                let found = format!("{from} -> {me} ? {{{}}}", arm_names.join(", "));
                let LocalType::Recv { from: peer, branches, .. } = &ty else {
                    self.diags.push(Diagnostic::mismatch(WrongActionKind, pos, head_fragment(&ty), found));
                    return;
                };
                if peer != from {
                    self.diags.push(Diagnostic::mismatch(WrongPeer, pos, head_fragment(&ty), found));
                    return;
                }
                let missing: Vec<&str> =
                    branches.iter().map(|(s, _)| s.name.as_str()).filter(|n| !arm_names.contains(n)).collect();
                if !missing.is_empty() {
                    self.diags.push(Diagnostic::mismatch(
                        MissingRecvBranch,
                        pos,
                        head_fragment(&ty),
                        format!("{found} (no arm for {})", missing.join(", ")),
                    ));
                }
                for (k, arm) in arms.iter().enumerate() {
                    if arm_names[..k].contains(&arm.sort.as_str()) {
                        let msg = format!("duplicate arm {}", arm.sort);
                        self.diags.push(Diagnostic::mismatch(WrongSort, arm.pos, head_fragment(&ty), msg));
                        continue;
                    }
                    let Some((sort, next)) = branch_lookup_name(branches, &arm.sort) else {
                        let msg = format!("{from} -> {me} ? {}", arm.sort);
                        self.diags.push(Diagnostic::mismatch(WrongSort, arm.pos, head_fragment(&ty), msg));
                        continue;
                    };
                    let mut env = env.clone();
                    env.advance(session, i, next.clone());
                    if let Some(v) = &arm.var {
                        match &sort.payload {
                            Payload::Endpoint { role, local } => {
                                env.add_session(v.clone(), role.clone(), (**local).clone())
                            }
                            _ => {
                                env.names.remove(v);
                                env.data.insert(v.clone(), DataType::Sort(sort.clone()));
                            }
                        }
                    }
                    self.process(env, &arm.body);
                }
            }
            Term::Loop { session, label, body } => {
                let Some(i) = self.session(&env, session, pos) else { return };
                let others = env
                    .slots
                    .iter()
                    .enumerate()
                    .filter(|(j, s)| *j != i && s.live)
                    .map(|(j, s)| (j, s.ty.clone()))
                    .collect();
                env.loops.push(LoopFrame { label: label.clone(), slot: i, entry: env.slots[i].ty.clone(), others });
                self.process(env, body);
            }
            Term::Recur { label, session, cont } => {
                let Some(frame) = env.loops.iter().rev().find(|f| &f.label == label).cloned() else {
                    self.diags.push(Diagnostic::mismatch(
                        UnboundVariable,
                        pos,
                        "an enclosing loop",
                        format!("recur {label}"),
                    ));
                    return;
                };
                let found = match session {
                    Some(s) => format!("recur {label}({s})"),
                    None => format!("recur {label}"),
                };
                let entry = norm(&frame.entry);
                let i = match session {
                    None => {
                        if !env.slots[frame.slot].live {
                            self.diags.push(Diagnostic::mismatch(LinearityReuse, pos, "a live session", found));
                            return;
                        }
                        frame.slot
                    }
                    Some(name) => match self.lookup(&env, name) {
                        Use::Live(i) => i,
                        Use::Stale => {
                            // the argument is an old state of some session: not the loop's current state
                            let expected = format!("the current state of the loop session ({})", head_fragment(&entry));
                            self.diags.push(Diagnostic::mismatch(WrongRecursiveType, pos, expected, found.clone()));
                            self.diags.push(Diagnostic::mismatch(
                                LinearityReuse,
                                pos,
                                "a live session",
                                format!("`{name}`, already used"),
                            ));
                            return;
                        }
                        Use::Unbound => {
                            self.diags.push(Diagnostic::mismatch(
                                UnboundVariable,
                                pos,
                                "a session variable",
                                format!("`{name}`"),
                            ));
                            return;
                        }
                    },
                };
                if i != frame.slot {
                    let expected = format!("the session of loop {label}");
                    self.diags.push(Diagnostic::mismatch(WrongRecursiveType, pos, expected, found));
                    return;
                }
                let cur = norm(&env.slots[i].ty);
                if cur != entry {
                    self.diags.push(Diagnostic::mismatch(
                        WrongRecursiveType,
                        pos,
                        head_fragment(&entry),
                        format!("{found} at {}", head_fragment(&cur)),
                    ));
                    return;
                }
                for (j, ty) in &frame.others {
                    let s = &env.slots[*j];
                    if !s.live || norm(&s.ty) != norm(ty) {
                        let now = if s.live { head_fragment(&s.ty) } else { "a consumed session".into() };
                        self.diags.push(Diagnostic::mismatch(
                            WrongRecursiveType,
                            pos,
                            format!("{} (session of {} at loop entry)", head_fragment(&unfold(ty)), s.role),
                            now,
                        ));
                        return;
                    }
                }
                env.consume(i);
                match cont {
                    Some(c) => self.process(env, c),
                    None => {
                        let fresh: Vec<&Slot> = env
                            .slots
                            .iter()
                            .enumerate()
                            .filter(|(j, s)| s.live && *j != i && !frame.others.iter().any(|(k, _)| k == j))
                            .map(|(_, s)| s)
                            .filter(|s| unfold(&s.ty) != LocalType::End)
                            .collect();
                        for s in fresh {
                            self.diags.push(Diagnostic::mismatch(
                                NonTerminatedSession,
                                pos,
                                format!("{} (session of {})", head_fragment(&unfold(&s.ty)), s.role),
                                found.clone(),
                            ));
                        }
                    }
                }
            }
            Term::If { cond, then, els } => {
                match self.expr(&env, cond, pos) {
                    Ok(DataType::Bool) => {}
                    Ok(t) => {
                        self.diags.push(Diagnostic::mismatch(ExprTypeMismatch, pos, "bool", format!("{t} `{cond}`")));
                        return;
                    }
                    Err(d) => {
                        self.diags.push(d);
                        return;
                    }
                }
                self.process(env.clone(), then);
                self.process(env, els);
            }
            Term::Let { name, value, cont } => {
                if let Expr::Var(v) | Expr::SessionRef(v) = value {
                    if let Some(binding) = env.names.get(v).copied() {
                        // aliasing shares the resource; whichever name acts first stales the other
                        env.data.remove(name);
                        env.names.insert(name.clone(), binding);
                        self.process(env, cont);
                        return;
                    }
                }
                match self.expr(&env, value, pos) {
                    Ok(t) => {
                        env.names.remove(name);
                        env.data.insert(name.clone(), t);
                        self.process(env, cont);
                    }
                    Err(d) => self.diags.push(d),
                }
            }
        }
    }

    /// Picks the branch a send selects. Returns its index and the session
    /// slot delegated by the payload, if any.
    fn select_branch(
        &mut self,
        env: &TypingEnv,
        sender: usize,
        ty: &LocalType,
        branches: &[(Sort, LocalType)],
        payload: &Expr,
        pos: Pos,
    ) -> Option<(usize, Option<usize>)> {
        let me = &env.slots[sender].role;
        let to = ty.peer().expect("send has a peer");
        let wrong =
            |what: String| Diagnostic::mismatch(WrongSort, pos, head_fragment(ty), format!("{me} -> {to} ! {what}"));

        // delegation: a session name, bare or wrapped in its sort
        let session_arg = match payload {
            Expr::Var(v) | Expr::SessionRef(v) if env.names.contains_key(v) => Some((v, None)),
            Expr::NewSort { sort, args } if args.len() == 1 => match &args[0] {
                Expr::Var(v) | Expr::SessionRef(v) if env.names.contains_key(v) => Some((v, Some(sort))),
                _ => None,
            },
            _ => None,
        };
        if let Some((name, sort_name)) = session_arg {
            let d = self.session(env, name, pos)?;
            if d == sender {
                self.diags.push(Diagnostic::mismatch(
                    LinearityReuse,
                    pos,
                    "another session",
                    format!("`{name}` sent over itself"),
                ));
                return None;
            }
            let (role, local) = (&env.slots[d].role, norm(&env.slots[d].ty));
            let fits = |s: &Sort| match &s.payload {
                Payload::Endpoint { role: r, local: l } => r == role && norm(l) == local,
                _ => false,
            };
            let hits: Vec<usize> = branches
                .iter()
                .enumerate()
                .filter(|(_, (s, _))| sort_name.is_none_or(|n| &s.name == n) && fits(s))
                .map(|(k, _)| k)
                .collect();
            return match hits.as_slice() {
                [k] => Some((*k, Some(d))),
                _ => {
                    self.diags.push(wrong(format!("endpoint of {role} at {}", head_fragment(&local))));
                    None
                }
            };
        }

        if let Expr::NewSort { sort, args } = payload {
            let Some(k) = branches.iter().position(|(s, _)| &s.name == sort) else {
                self.diags.push(wrong(payload.to_string()));
                return None;
            };
            let declared = branches[k].0.clone();
            if let Err(d) = self.constructor_args(env, &declared, args, pos) {
                self.diags.push(d);
                return None;
            }
            return Some((k, None));
        }

        let t = match self.expr(env, payload, pos) {
            Ok(t) => t,
            Err(d) => {
                self.diags.push(d);
                return None;
            }
        };
        let hits: Vec<usize> = match &t {
            DataType::Sort(s) => branches.iter().position(|(b, _)| b == s).into_iter().collect(),
            DataType::Int => branches
                .iter()
                .enumerate()
                .filter(|(_, (b, _))| matches!(b.payload, Payload::Int))
                .map(|(k, _)| k)
                .collect(),
            DataType::Str => branches
                .iter()
                .enumerate()
                .filter(|(_, (b, _))| matches!(b.payload, Payload::String))
                .map(|(k, _)| k)
                .collect(),
            DataType::Bool | DataType::Endpoint { .. } => Vec::new(),
        };
        match hits.as_slice() {
            [k] => Some((*k, None)),
            _ => {
                let what = match &t {
                    DataType::Sort(s) => s.name.clone(),
                    other => format!("{payload} ({other})"),
                };
                self.diags.push(wrong(what));
                None
            }
        }
    }

    fn constructor_args(&self, env: &TypingEnv, sort: &Sort, args: &[Expr], pos: Pos) -> Result<(), Diagnostic> {
        let mismatch = |expected: &str, found: String| {
            Diagnostic::mismatch(ExprTypeMismatch, pos, format!("{}({expected})", sort.name), found)
        };
        match (&sort.payload, args) {
            (Payload::None, []) => Ok(()),
            (Payload::None, _) => Err(mismatch("", format!("{} argument(s)", args.len()))),
            (Payload::Int, [a]) => {
                let t = self.expr(env, a, pos)?;
                if t.as_int() {
                    Ok(())
                } else {
                    Err(mismatch("int", format!("{t} `{a}`")))
                }
            }
            (Payload::String, [a]) => match self.expr(env, a, pos)? {
                DataType::Str => Ok(()),
                DataType::Sort(s) if matches!(s.payload, Payload::String) => Ok(()),
                t => Err(mismatch("string", format!("{t} `{a}`"))),
            },
            (Payload::Int, _) => Err(mismatch("int", format!("{} argument(s)", args.len()))),
            (Payload::String, _) => Err(mismatch("string", format!("{} argument(s)", args.len()))),
            (Payload::Endpoint { .. }, _) => Err(mismatch("endpoint", "a non-session argument".into())),
        }
    }

    fn expr(&self, env: &TypingEnv, e: &Expr, pos: Pos) -> Result<DataType, Diagnostic> {
        let int_operand = |x: &Expr| -> Result<(), Diagnostic> {
            let t = self.expr(env, x, pos)?;
            if t.as_int() {
                Ok(())
            } else {
                Err(Diagnostic::mismatch(ExprTypeMismatch, pos, "int", format!("{t} `{x}`")))
            }
        };
        match e {
            Expr::Int(_) => Ok(DataType::Int),
            Expr::Str(_) => Ok(DataType::Str),
            Expr::Var(v) | Expr::SessionRef(v) => {
                if let Some(t) = env.data.get(v) {
                    if matches!(e, Expr::Var(_)) {
                        return Ok(t.clone());
                    }
                }
                match self.lookup(env, v) {
                    Use::Live(i) => {
                        Ok(DataType::Endpoint { role: env.slots[i].role.clone(), local: env.slots[i].ty.clone() })
                    }
                    Use::Stale => {
                        Err(Diagnostic::mismatch(LinearityReuse, pos, "a live session", format!("`{v}`, already used")))
                    }
                    Use::Unbound => {
                        Err(Diagnostic::mismatch(UnboundVariable, pos, "a bound variable", format!("`{v}`")))
                    }
                }
            }
            Expr::NewSort { sort, args } => {
                let s = self.sorts.get(sort).cloned().unwrap_or_else(|| Sort::unit(sort.as_str()));
                self.constructor_args(env, &s, args, pos)?;
                Ok(DataType::Sort(s))
            }
            Expr::Sub(a, b) => {
                int_operand(a)?;
                int_operand(b)?;
                Ok(DataType::Int)
            }
            Expr::Lt(a, b) => {
                int_operand(a)?;
                int_operand(b)?;
                Ok(DataType::Bool)
            }
            Expr::Field { base, field } => match self.expr(env, base, pos)? {
                DataType::Sort(s) => match s.payload {
                    Payload::Int => Ok(DataType::Int),
                    Payload::String => Ok(DataType::Str),
                    _ => Err(Diagnostic::mismatch(
                        ExprTypeMismatch,
                        pos,
                        "a message with an int or string payload",
                        format!("`{base}.{field}` on sort {}", s.name),
                    )),
                },
                t => Err(Diagnostic::mismatch(ExprTypeMismatch, pos, "a received message", format!("{t} `{base}`"))),
            },
        }
    }
}
