use std::collections::BTreeSet;
use std::fmt::Debug;

use super::{GlobalType, LocalType, RecVar, Role, Sort};

/// Shared structure of global and local types: action nodes carrying
/// branches, `End`, and the `Loop`/`Recur` binder pair.
pub trait RecursiveType: Clone + PartialEq + Debug {
    fn as_loop(&self) -> Option<(&RecVar, &Self)>;
    fn as_recur(&self) -> Option<&RecVar>;
    fn make_loop(var: RecVar, body: Self) -> Self;
    fn make_recur(var: RecVar) -> Self;

    /// Branches of the head action; empty for `End`, `Loop` and `Recur`.
    fn branches(&self) -> &[(Sort, Self)];

    /// Rebuilds the head action with new branches. Non-action nodes are returned unchanged.
    fn with_branches(&self, branches: Vec<(Sort, Self)>) -> Self;

    /// `(from, to)` of the head action.
    fn action_roles(&self) -> Option<(&Role, &Role)>;

    fn is_action(&self) -> bool {
        self.action_roles().is_some()
    }
}

impl RecursiveType for GlobalType {
    fn as_loop(&self) -> Option<(&RecVar, &Self)> {
        match self {
            GlobalType::Loop { var, body } => Some((var, body)),
            _ => None,
        }
    }

    fn as_recur(&self) -> Option<&RecVar> {
        match self {
            GlobalType::Recur { var } => Some(var),
            _ => None,
        }
    }

    fn make_loop(var: RecVar, body: Self) -> Self {
        GlobalType::Loop { var, body: Box::new(body) }
    }

    fn make_recur(var: RecVar) -> Self {
        GlobalType::Recur { var }
    }

    fn branches(&self) -> &[(Sort, Self)] {
        match self {
            GlobalType::Com { branches, .. } => branches,
            _ => &[],
        }
    }

    fn with_branches(&self, branches: Vec<(Sort, Self)>) -> Self {
        match self {
            GlobalType::Com { from, to, .. } => GlobalType::Com { from: from.clone(), to: to.clone(), branches },
            other => other.clone(),
        }
    }

    fn action_roles(&self) -> Option<(&Role, &Role)> {
        match self {
            GlobalType::Com { from, to, .. } => Some((from, to)),
            _ => None,
        }
    }
}

impl RecursiveType for LocalType {
    fn as_loop(&self) -> Option<(&RecVar, &Self)> {
        match self {
            LocalType::Loop { var, body } => Some((var, body)),
            _ => None,
        }
    }

    fn as_recur(&self) -> Option<&RecVar> {
        match self {
            LocalType::Recur { var } => Some(var),
            _ => None,
        }
    }

    fn make_loop(var: RecVar, body: Self) -> Self {
        LocalType::Loop { var, body: Box::new(body) }
    }

    fn make_recur(var: RecVar) -> Self {
        LocalType::Recur { var }
    }

    fn branches(&self) -> &[(Sort, Self)] {
        match self {
            LocalType::Send { branches, .. } | LocalType::Recv { branches, .. } => branches,
            _ => &[],
        }
    }

    fn with_branches(&self, branches: Vec<(Sort, Self)>) -> Self {
        match self {
            LocalType::Send { from, to, .. } => LocalType::Send { from: from.clone(), to: to.clone(), branches },
            LocalType::Recv { from, to, .. } => LocalType::Recv { from: from.clone(), to: to.clone(), branches },
            other => other.clone(),
        }
    }

    fn action_roles(&self) -> Option<(&Role, &Role)> {
        match self {
            LocalType::Send { from, to, .. } | LocalType::Recv { from, to, .. } => Some((from, to)),
            _ => None,
        }
    }
}

/// Recursion variables occurring free in `t`.
pub fn free_vars<T: RecursiveType>(t: &T) -> BTreeSet<RecVar> {
    fn walk<T: RecursiveType>(t: &T, bound: &mut Vec<RecVar>, out: &mut BTreeSet<RecVar>) {
        if let Some(v) = t.as_recur() {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        } else if let Some((v, body)) = t.as_loop() {
            bound.push(v.clone());
            walk(body, bound, out);
            bound.pop();
        } else {
            for (_, c) in t.branches() {
                walk(c, bound, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(t, &mut Vec::new(), &mut out);
    out
}

fn fresh_var(base: &RecVar, avoid: &BTreeSet<RecVar>) -> RecVar {
    (1..)
        .map(|i| RecVar::new(format!("{}_{i}", base.name())))
        .find(|v| !avoid.contains(v))
        .expect("unbounded supply of names")
}

/// Replaces every free `Recur(var)` in `body` by `replacement`.
///
/// A nested `Loop(var, _)` shadows `var`. Binders that would capture a free
/// variable of `replacement` are renamed first.
pub fn substitute<T: RecursiveType>(body: &T, var: &RecVar, replacement: &T) -> T {
    let fv = free_vars(replacement);
    subst(body, var, replacement, &fv)
}

fn subst<T: RecursiveType>(t: &T, var: &RecVar, repl: &T, fv_repl: &BTreeSet<RecVar>) -> T {
    if let Some(v) = t.as_recur() {
        return if v == var { repl.clone() } else { t.clone() };
    }
    if let Some((v, body)) = t.as_loop() {
        if v == var {
            return t.clone();
        }
        if fv_repl.contains(v) {
            let fv_body = free_vars(body);
            if fv_body.contains(var) {
                let mut avoid: BTreeSet<RecVar> = fv_repl.union(&fv_body).cloned().collect();
                avoid.insert(var.clone());
                let fresh = fresh_var(v, &avoid);
                let fresh_fv = BTreeSet::from([fresh.clone()]);
                let renamed = subst(body, v, &T::make_recur(fresh.clone()), &fresh_fv);
                return T::make_loop(fresh, subst(&renamed, var, repl, fv_repl));
            }
        }
        return T::make_loop(v.clone(), subst(body, var, repl, fv_repl));
    }
    if t.is_action() {
        let branches = t.branches().iter().map(|(s, c)| (s.clone(), subst(c, var, repl, fv_repl))).collect();
        t.with_branches(branches)
    } else {
        t.clone()
    }
}

fn loop_depth<T: RecursiveType>(t: &T) -> usize {
    if let Some((_, body)) = t.as_loop() {
        1 + loop_depth(body)
    } else {
        t.branches().iter().map(|(_, c)| loop_depth(c)).max().unwrap_or(0)
    }
}

/// Unfolds head `Loop`s until the head is something else.
pub fn unfold<T: RecursiveType>(t: &T) -> T {
    unfold_counted(t).0
}

/// [`unfold`], also returning the number of substitution steps taken.
///
/// The number of steps is capped at the loop nesting depth of `t`, which is
/// only reached by non-contractive input.
pub fn unfold_counted<T: RecursiveType>(t: &T) -> (T, usize) {
    let limit = loop_depth(t);
    let mut current = t.clone();
    let mut steps = 0;
    while steps < limit {
        let Some((var, body)) = current.as_loop() else { break };
        current = substitute(body, var, &current);
        steps += 1;
    }
    (current, steps)
}

/// Renames bound recursion variables to `X0, X1, ...` in depth-first preorder.
/// Free variables keep their names; canonical names that clash with a free
/// variable are skipped.
pub fn alpha_normalize<T: RecursiveType>(t: &T) -> T {
    let avoid = free_vars(t);
    let mut counter = 0usize;
    let mut env = Vec::new();
    normalize(t, &mut env, &mut counter, &avoid)
}

fn normalize<T: RecursiveType>(
    t: &T,
    env: &mut Vec<(RecVar, RecVar)>,
    counter: &mut usize,
    avoid: &BTreeSet<RecVar>,
) -> T {
    if let Some(v) = t.as_recur() {
        let mapped = env.iter().rev().find(|(from, _)| from == v).map(|(_, to)| to.clone());
        return T::make_recur(mapped.unwrap_or_else(|| v.clone()));
    }
    if let Some((v, body)) = t.as_loop() {
        let name = loop {
            let candidate = RecVar::new(format!("X{counter}"));
            *counter += 1;
            if !avoid.contains(&candidate) {
                break candidate;
            }
        };
        env.push((v.clone(), name.clone()));
        let body = normalize(body, env, counter, avoid);
        env.pop();
        return T::make_loop(name, body);
    }
    if t.is_action() {
        let branches = t.branches().iter().map(|(s, c)| (s.clone(), normalize(c, env, counter, avoid))).collect();
        t.with_branches(branches)
    } else {
        t.clone()
    }
}

/// Alpha-equivalence: equal trees after [`alpha_normalize`], branch order significant.
pub fn struct_eq<T: RecursiveType>(a: &T, b: &T) -> bool {
    alpha_normalize(a) == alpha_normalize(b)
}
