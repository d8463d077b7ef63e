//! Straightforward reference implementations to test the library against.

use std::collections::{BTreeSet, HashMap};

use mpstkit::ast::{GlobalType, LocalType, RecVar, RecursiveType, Sort};
use mpstkit::fsm::Fsm;

/// Swaps sends and receives everywhere.
pub fn manual_dual(l: &LocalType) -> LocalType {
    let flip = |bs: &[(Sort, LocalType)]| bs.iter().map(|(s, c)| (s.clone(), manual_dual(c))).collect();
    match l {
        LocalType::Send { from, to, branches } => {
            LocalType::Recv { from: from.clone(), to: to.clone(), branches: flip(branches) }
        }
        LocalType::Recv { from, to, branches } => {
            LocalType::Send { from: from.clone(), to: to.clone(), branches: flip(branches) }
        }
        LocalType::End => LocalType::End,
        LocalType::Loop { var, body } => LocalType::Loop { var: var.clone(), body: Box::new(manual_dual(body)) },
        LocalType::Recur { var } => LocalType::Recur { var: var.clone() },
    }
}

/// Renames every binder to a name from `fresh`, which must never repeat and
/// must avoid the free variables of `t`.
pub fn rename_binders<T: RecursiveType>(t: &T, fresh: &mut dyn FnMut() -> RecVar) -> T {
    fn go<T: RecursiveType>(t: &T, env: &mut Vec<(RecVar, RecVar)>, fresh: &mut dyn FnMut() -> RecVar) -> T {
        if let Some((v, body)) = t.as_loop() {
            let n = fresh();
            env.push((v.clone(), n.clone()));
            let body = go(body, env, fresh);
            env.pop();
            T::make_loop(n, body)
        } else if let Some(v) = t.as_recur() {
            match env.iter().rev().find(|(old, _)| old == v) {
                Some((_, new)) => T::make_recur(new.clone()),
                None => t.clone(),
            }
        } else if t.is_action() {
            t.with_branches(t.branches().iter().map(|(s, c)| (s.clone(), go(c, env, fresh))).collect())
        } else {
            t.clone()
        }
    }
    go(t, &mut Vec::new(), fresh)
}

/// A fresh-name source `prefix0, prefix1, ...`.
pub fn fresh_names(prefix: &str) -> impl FnMut() -> RecVar + '_ {
    let mut n = 0usize;
    move || {
        n += 1;
        RecVar::new(format!("{prefix}{n}"))
    }
}

/// Alpha-equivalence by comparing binder positions.
pub fn alpha_eq<T: RecursiveType>(a: &T, b: &T) -> bool {
    fn go<T: RecursiveType>(a: &T, b: &T, ea: &mut Vec<RecVar>, eb: &mut Vec<RecVar>) -> bool {
        match (a.as_loop(), b.as_loop()) {
            (Some((va, ba)), Some((vb, bb))) => {
                ea.push(va.clone());
                eb.push(vb.clone());
                let r = go(ba, bb, ea, eb);
                ea.pop();
                eb.pop();
                return r;
            }
            (Some(_), None) | (None, Some(_)) => return false,
            _ => {}
        }
        match (a.as_recur(), b.as_recur()) {
            (Some(x), Some(y)) => {
                let ix = ea.iter().rposition(|v| v == x);
                let iy = eb.iter().rposition(|v| v == y);
                return match (ix, iy) {
                    (Some(i), Some(j)) => ea.len() - i == eb.len() - j,
                    (None, None) => x == y,
                    _ => false,
                };
            }
            (Some(_), None) | (None, Some(_)) => return false,
            _ => {}
        }
        if a.is_action() != b.is_action() {
            return false;
        }
        if !a.is_action() {
            return true; // both End
        }
        a.action_roles() == b.action_roles()
            && same_kind(a, b)
            && a.branches().len() == b.branches().len()
            && a.branches().iter().zip(b.branches()).all(|((s, x), (t, y))| s == t && go(x, y, ea, eb))
    }
    go(a, b, &mut Vec::new(), &mut Vec::new())
}

/// Both are sends or both are receives (always true for global types).
fn same_kind<T: RecursiveType>(a: &T, b: &T) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

/// Deepest chain of directly nested head loops, `rec X . rec Y . ...`.
pub fn head_loop_depth<T: RecursiveType>(t: &T) -> usize {
    match t.as_loop() {
        Some((_, body)) => 1 + head_loop_depth(body),
        None => 0,
    }
}

/// Maximum number of loops on any root-to-leaf path.
pub fn loop_nesting<T: RecursiveType>(t: &T) -> usize {
    match t.as_loop() {
        Some((_, body)) => 1 + loop_nesting(body),
        None => t.branches().iter().map(|(_, c)| loop_nesting(c)).max().unwrap_or(0),
    }
}

pub fn size<T: RecursiveType>(t: &T) -> usize {
    match t.as_loop() {
        Some((_, body)) => 1 + size(body),
        None => 1 + t.branches().iter().map(|(_, c)| size(c)).sum::<usize>(),
    }
}

/// Plain substitution of the free variable `x`; never renames.
fn replace_free(g: &GlobalType, x: &str, by: &GlobalType) -> GlobalType {
    match g {
        GlobalType::Recur { var } if var.name() == x => by.clone(),
        GlobalType::Loop { var, .. } if var.name() == x => g.clone(),
        GlobalType::Loop { var, body } => {
            GlobalType::Loop { var: var.clone(), body: Box::new(replace_free(body, x, by)) }
        }
        GlobalType::Com { from, to, branches } => GlobalType::Com {
            from: from.clone(),
            to: to.clone(),
            branches: branches.iter().map(|(s, c)| (s.clone(), replace_free(c, x, by))).collect(),
        },
        _ => g.clone(),
    }
}

/// Expected result of plugging `arg` into the parameter `hole` of `body`:
/// binders of `body` are renamed apart first so free variables of `arg`
/// stay free.
pub fn plug(body: &GlobalType, hole: &str, arg: &GlobalType) -> GlobalType {
    let renamed = rename_binders(body, &mut fresh_names("Fresh"));
    replace_free(&renamed, hole, arg)
}

/// Label of a local action in the `pq!t` / `pq?t` notation.
pub fn local_label(l: &LocalType, sort: &Sort) -> Option<String> {
    match l {
        LocalType::Send { from, to, .. } => Some(format!("{from}{to}!{}", sort.name)),
        LocalType::Recv { from, to, .. } => Some(format!("{from}{to}?{}", sort.name)),
        _ => None,
    }
}

/// Unfolds head loops by direct substitution (independent of the library).
fn open(l: &LocalType) -> LocalType {
    let mut cur = l.clone();
    let mut guard = 0;
    while let LocalType::Loop { var, body } = &cur {
        cur = subst_local(body, var, &cur);
        guard += 1;
        assert!(guard < 64, "non-contractive type");
    }
    cur
}

fn subst_local(t: &LocalType, x: &RecVar, by: &LocalType) -> LocalType {
    match t {
        LocalType::Recur { var } if var == x => by.clone(),
        LocalType::Loop { var, .. } if var == x => t.clone(),
        LocalType::Loop { var, body } => LocalType::Loop { var: var.clone(), body: Box::new(subst_local(body, x, by)) },
        LocalType::Send { .. } | LocalType::Recv { .. } => {
            t.with_branches(t.branches().iter().map(|(s, c)| (s.clone(), subst_local(c, x, by))).collect())
        }
        _ => t.clone(),
    }
}

/// Every label sequence of length at most `k` along the branches of `l`.
pub fn type_paths(l: &LocalType, k: usize) -> BTreeSet<Vec<String>> {
    fn go(l: &LocalType, k: usize, prefix: &mut Vec<String>, out: &mut BTreeSet<Vec<String>>) {
        out.insert(prefix.clone());
        if prefix.len() == k {
            return;
        }
        let l = open(l);
        for (s, c) in l.branches() {
            prefix.push(local_label(&l, s).expect("action"));
            go(c, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = BTreeSet::new();
    go(l, k, &mut Vec::new(), &mut out);
    out
}

/// Every label sequence of length at most `k` from the initial state.
pub fn fsm_paths(f: &Fsm, k: usize) -> BTreeSet<Vec<String>> {
    let mut by_state: HashMap<usize, Vec<(String, usize)>> = HashMap::new();
    for t in &f.transitions {
        by_state.entry(t.from).or_default().push((t.action.label(), t.to));
    }
    let mut out = BTreeSet::new();
    let mut frontier = vec![(f.initial, Vec::<String>::new())];
    for _ in 0..=k {
        let mut next = Vec::new();
        for (s, path) in frontier {
            out.insert(path.clone());
            if path.len() == k {
                continue;
            }
            for (label, to) in by_state.get(&s).into_iter().flatten() {
                let mut p = path.clone();
                p.push(label.clone());
                next.push((*to, p));
            }
        }
        frontier = next;
    }
    out
}

/// Violations a wf mutation is meant to introduce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WfMutation {
    DuplicateSort,
    SelfCommunication,
    FreeVariable,
    Unguarded,
}

pub const WF_MUTATIONS: [WfMutation; 4] =
    [WfMutation::DuplicateSort, WfMutation::SelfCommunication, WfMutation::FreeVariable, WfMutation::Unguarded];

/// Applies `m` at the `at`-th eligible node (preorder, modulo their count).
/// Returns `None` when the type has no eligible node.
pub fn mutate_global(g: &GlobalType, m: WfMutation, at: usize) -> Option<GlobalType> {
    fn count(g: &GlobalType, m: WfMutation) -> usize {
        let here = match (m, g) {
            (WfMutation::DuplicateSort | WfMutation::SelfCommunication, GlobalType::Com { .. }) => 1,
            (WfMutation::FreeVariable | WfMutation::Unguarded, _) => 1,
            _ => 0,
        };
        here + match g {
            GlobalType::Com { branches, .. } => branches.iter().map(|(_, c)| count(c, m)).sum(),
            GlobalType::Loop { body, .. } => count(body, m),
            _ => 0,
        }
    }
    fn go(g: &GlobalType, m: WfMutation, at: &mut Option<usize>) -> GlobalType {
        let eligible = match m {
            WfMutation::DuplicateSort | WfMutation::SelfCommunication => matches!(g, GlobalType::Com { .. }),
            _ => true,
        };
        if eligible {
            if *at == Some(0) {
                *at = None;
                return match (m, g) {
                    (WfMutation::DuplicateSort, GlobalType::Com { from, to, branches }) => {
                        let mut bs = branches.clone();
                        bs.push(branches[0].clone());
                        GlobalType::Com { from: from.clone(), to: to.clone(), branches: bs }
                    }
                    (WfMutation::SelfCommunication, GlobalType::Com { from, branches, .. }) => {
                        GlobalType::Com { from: from.clone(), to: from.clone(), branches: branches.clone() }
                    }
                    (WfMutation::FreeVariable, _) => GlobalType::var("Unbound"),
                    (WfMutation::Unguarded, _) => GlobalType::rec("Spin", GlobalType::var("Spin")),
                    _ => unreachable!(),
                };
            }
            *at = at.map(|n| n - 1);
        }
        match g {
            GlobalType::Com { from, to, branches } => GlobalType::Com {
                from: from.clone(),
                to: to.clone(),
                branches: branches.iter().map(|(s, c)| (s.clone(), go(c, m, at))).collect(),
            },
            GlobalType::Loop { var, body } => GlobalType::Loop { var: var.clone(), body: Box::new(go(body, m, at)) },
            _ => g.clone(),
        }
    }
    let n = count(g, m);
    if n == 0 {
        return None;
    }
    Some(go(g, m, &mut Some(at % n)))
}
