//! Projection of global types onto roles, and the merge operators it needs.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::ast::{
    free_vars, substitute, AstPath, Branches, GlobalType, LocalType, PathStep, RecVar, RecursiveType, Role, Sort,
};

/// Which kind of choice the merged operands are alternatives of.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergeMode {
    /// Full merge: the choice was made elsewhere and is learned by receiving.
    /// Receive branches are unioned, send branches must agree.
    Full,
    /// The dual operator, for alternatives chosen by the role itself:
    /// send branches are unioned, receive branches must agree.
    Choice,
    /// Both send and receive branches are unioned. Constructors, peers and
    /// recursion must still agree.
    Union,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MergeFailure {
    MixedConstructors,
    PeerMismatch,
    /// Branch sort sets of a non-unionable action differ.
    SortsDiffer {
        left: Vec<String>,
        right: Vec<String>,
    },
    /// The same sort name carries different payload schemas.
    SortConflict {
        sort: String,
    },
    RecursionMismatch,
}

impl fmt::Display for MergeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MergeFailure::MixedConstructors => f.write_str("different head constructors"),
            MergeFailure::PeerMismatch => f.write_str("different communicating roles"),
            MergeFailure::SortsDiffer { left, right } => {
                write!(f, "branch sorts differ ({{{}}} vs {{{}}})", left.join(", "), right.join(", "))
            }
            MergeFailure::SortConflict { sort } => write!(f, "sort {sort} used with different payloads"),
            MergeFailure::RecursionMismatch => f.write_str("different recursion variables"),
        }
    }
}

/// The two operands of the innermost failing merge.
#[derive(Clone, Debug, Error, PartialEq)]
#[error("cannot merge `{left}` with `{right}`: {reason}")]
pub struct MergeError {
    pub left: Box<LocalType>,
    pub right: Box<LocalType>,
    pub reason: MergeFailure,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MergeAllError {
    #[error("nothing to merge")]
    Empty,
    /// Folding failed when the accumulated merge of operands `0..index` met operand `index`.
    #[error("merging operand {index} into operands 0..{index}: {source}")]
    Failed { index: usize, source: MergeError },
}

/// The global type cannot be projected onto `role`.
#[derive(Clone, Debug, Error, PartialEq)]
#[error("projection onto {role} failed at {path}: {source}")]
pub struct ProjectionError {
    pub role: Role,
    /// Path of the communication whose branches could not be merged.
    pub path: AstPath,
    pub source: MergeAllError,
}

/// Full merge of two local types.
pub fn merge(a: &LocalType, b: &LocalType) -> Result<LocalType, MergeError> {
    merge_with(a, b, MergeMode::Full)
}

pub fn merge_with(a: &LocalType, b: &LocalType, mode: MergeMode) -> Result<LocalType, MergeError> {
    let fail = |reason| MergeError { left: Box::new(a.clone()), right: Box::new(b.clone()), reason };
    match (a, b) {
        (LocalType::End, LocalType::End) => Ok(LocalType::End),
        (LocalType::Send { from: p1, to: q1, branches: b1 }, LocalType::Send { from: p2, to: q2, branches: b2 })
        | (LocalType::Recv { from: p1, to: q1, branches: b1 }, LocalType::Recv { from: p2, to: q2, branches: b2 }) => {
            if p1 != p2 || q1 != q2 {
                return Err(fail(MergeFailure::PeerMismatch));
            }
            let is_send = matches!(a, LocalType::Send { .. });
            let union = match mode {
                MergeMode::Full => !is_send,
                MergeMode::Choice => is_send,
                MergeMode::Union => true,
            };
            let branches = if union {
                union_branches(b1, b2, mode)?
            } else {
                same_branches(b1, b2, mode).map_err(|e| e.unwrap_or_else(fail))?
            };
            Ok(a.with_branches(branches))
        }
        (LocalType::Loop { var: x, body: b1 }, LocalType::Loop { var: y, body: b2 }) => {
            let (var, left, right) = align_binders(x, b1, y, b2);
            Ok(LocalType::Loop { var, body: Box::new(merge_with(&left, &right, mode)?) })
        }
        (LocalType::Recur { var: x }, LocalType::Recur { var: y }) => {
            if x == y {
                Ok(a.clone())
            } else {
                Err(fail(MergeFailure::RecursionMismatch))
            }
        }
        _ => Err(fail(MergeFailure::MixedConstructors)),
    }
}

/// Renames the binders of two loops to a common name that captures nothing.
fn align_binders(x: &RecVar, b1: &LocalType, y: &RecVar, b2: &LocalType) -> (RecVar, LocalType, LocalType) {
    if x == y {
        return (x.clone(), b1.clone(), b2.clone());
    }
    let fv2 = free_vars(b2);
    if !fv2.contains(x) {
        return (x.clone(), b1.clone(), substitute(b2, y, &LocalType::Recur { var: x.clone() }));
    }
    let fv1 = free_vars(b1);
    let taken: BTreeSet<&RecVar> = fv1.iter().chain(fv2.iter()).collect();
    let fresh = (0..)
        .map(|i| RecVar::new(format!("{}_m{i}", x.name())))
        .find(|v| !taken.contains(v))
        .expect("unbounded supply of names");
    let rec = LocalType::Recur { var: fresh.clone() };
    (fresh, substitute(b1, x, &rec), substitute(b2, y, &rec))
}

fn names(bs: &[(Sort, LocalType)]) -> Vec<String> {
    bs.iter().map(|(s, _)| s.name.clone()).collect()
}

/// Keeps the common order when both sides agree on it, otherwise sorts by
/// name, so the result does not depend on operand order.
fn order(mut merged: Branches<LocalType>, b1: &[(Sort, LocalType)], b2: &[(Sort, LocalType)]) -> Branches<LocalType> {
    if names(b1) != names(b2) {
        merged.sort_by(|(s1, _), (s2, _)| s1.name.cmp(&s2.name));
    }
    merged
}

fn union_branches(
    b1: &[(Sort, LocalType)],
    b2: &[(Sort, LocalType)],
    mode: MergeMode,
) -> Result<Branches<LocalType>, MergeError> {
    let mut merged = Vec::with_capacity(b1.len() + b2.len());
    for (sort, cont) in b1 {
        match b2.iter().find(|(s, _)| s.name == sort.name) {
            Some((other, cont2)) => {
                if other != sort {
                    return Err(MergeError {
                        left: Box::new(cont.clone()),
                        right: Box::new(cont2.clone()),
                        reason: MergeFailure::SortConflict { sort: sort.name.clone() },
                    });
                }
                merged.push((sort.clone(), merge_with(cont, cont2, mode)?));
            }
            None => merged.push((sort.clone(), cont.clone())),
        }
    }
    for (sort, cont) in b2 {
        if !b1.iter().any(|(s, _)| s.name == sort.name) {
            merged.push((sort.clone(), cont.clone()));
        }
    }
    Ok(order(merged, b1, b2))
}

/// Pointwise merge of branch lists with the same sort set. The outer error is
/// either a nested merge failure or the reason to report for the whole pair.
fn same_branches(
    b1: &[(Sort, LocalType)],
    b2: &[(Sort, LocalType)],
    mode: MergeMode,
) -> Result<Branches<LocalType>, Result<MergeError, MergeFailure>> {
    let set1: BTreeSet<&str> = b1.iter().map(|(s, _)| s.name.as_str()).collect();
    let set2: BTreeSet<&str> = b2.iter().map(|(s, _)| s.name.as_str()).collect();
    if set1 != set2 || b1.len() != b2.len() {
        return Err(Err(MergeFailure::SortsDiffer { left: names(b1), right: names(b2) }));
    }
    let mut merged = Vec::with_capacity(b1.len());
    for (sort, cont) in b1 {
        let (other, cont2) = b2.iter().find(|(s, _)| s.name == sort.name).expect("same sort set");
        if other != sort {
            return Err(Err(MergeFailure::SortConflict { sort: sort.name.clone() }));
        }
        merged.push((sort.clone(), merge_with(cont, cont2, mode).map_err(Ok)?));
    }
    Ok(order(merged, b1, b2))
}

/// Left fold of [`merge`] over a non-empty list.
pub fn merge_all(ts: &[LocalType]) -> Result<LocalType, MergeAllError> {
    merge_all_with(ts, MergeMode::Full)
}

pub fn merge_all_with(ts: &[LocalType], mode: MergeMode) -> Result<LocalType, MergeAllError> {
    let (first, rest) = ts.split_first().ok_or(MergeAllError::Empty)?;
    rest.iter().enumerate().try_fold(first.clone(), |acc, (i, t)| {
        merge_with(&acc, t, mode).map_err(|source| MergeAllError::Failed { index: i + 1, source })
    })
}

/// Projects `g` onto `role`.
///
/// The sender sees a send, the receiver a receive, and any other role the
/// full merge of its projected continuations.
pub fn project(g: &GlobalType, role: &Role) -> Result<LocalType, ProjectionError> {
    project_at(g, role, &AstPath::root())
}

fn project_at(g: &GlobalType, role: &Role, path: &AstPath) -> Result<LocalType, ProjectionError> {
    match g {
        GlobalType::Com { from, to, branches } => {
            let projected = branches
                .iter()
                .enumerate()
                .map(|(i, (sort, cont))| Ok((sort.clone(), project_at(cont, role, &path.child(PathStep::Branch(i)))?)))
                .collect::<Result<Vec<_>, ProjectionError>>()?;
            if from == role {
                Ok(LocalType::Send { from: from.clone(), to: to.clone(), branches: projected })
            } else if to == role {
                Ok(LocalType::Recv { from: from.clone(), to: to.clone(), branches: projected })
            } else {
                let conts: Vec<LocalType> = projected.into_iter().map(|(_, l)| l).collect();
                merge_all(&conts).map_err(|source| ProjectionError { role: role.clone(), path: path.clone(), source })
            }
        }
        GlobalType::End => Ok(LocalType::End),
        GlobalType::Loop { var, body } => {
            let l = LocalType::Loop {
                var: var.clone(),
                body: Box::new(project_at(body, role, &path.child(PathStep::Body))?),
            };
            // a loop in which the role never acts would project to `rec X . X`
            Ok(if idles(&l) { LocalType::End } else { l })
        }
        GlobalType::Recur { var } => Ok(LocalType::Recur { var: var.clone() }),
    }
}

/// A chain of loops ending in a variable bound by the chain itself.
fn idles(l: &LocalType) -> bool {
    let mut bound = Vec::new();
    let mut cur = l;
    while let LocalType::Loop { var, body } = cur {
        bound.push(var);
        cur = body;
    }
    matches!(cur, LocalType::Recur { var } if bound.contains(&var))
}

/// Projects onto every role of `g`, in order of first appearance.
pub fn project_all(g: &GlobalType) -> Result<Vec<(Role, LocalType)>, ProjectionError> {
    g.roles().into_iter().map(|r| project(g, &r).map(|l| (r, l))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::struct_eq;

    fn recv(from: &str, to: &str, bs: Vec<(&str, LocalType)>) -> LocalType {
        LocalType::recv(from, to, bs.into_iter().map(|(s, c)| (Sort::unit(s), c)).collect())
    }

    fn send(from: &str, to: &str, bs: Vec<(&str, LocalType)>) -> LocalType {
        LocalType::send(from, to, bs.into_iter().map(|(s, c)| (Sort::unit(s), c)).collect())
    }

    fn com(from: &str, to: &str, bs: Vec<(&str, GlobalType)>) -> GlobalType {
        GlobalType::com(from, to, bs.into_iter().map(|(s, c)| (Sort::unit(s), c)).collect())
    }

    #[test]
    fn receive_union() {
        let k1 = recv("B2", "S", vec![("String", LocalType::End)]);
        let got = merge(&recv("B2", "S", vec![("Ok", k1.clone())]), &recv("B2", "S", vec![("Quit", LocalType::End)]))
            .unwrap();
        assert_eq!(got, recv("B2", "S", vec![("Ok", k1), ("Quit", LocalType::End)]));
    }

    #[test]
    fn mixed_constructors_fail() {
        let a = recv("A", "S", vec![("Ok", send("A", "S", vec![("Auth", LocalType::End)]))]);
        let err = merge(&a, &LocalType::End).unwrap_err();
        assert_eq!(err.reason, MergeFailure::MixedConstructors);
    }

    #[test]
    fn sends_must_agree() {
        let err = merge(&send("A", "B", vec![("Ok", LocalType::End)]), &send("A", "B", vec![("No", LocalType::End)]))
            .unwrap_err();
        assert!(matches!(err.reason, MergeFailure::SortsDiffer { .. }));
        let same = send("A", "B", vec![("Ok", LocalType::End)]);
        assert_eq!(merge(&same, &same).unwrap(), same);
    }

    #[test]
    fn choice_mode_is_dual() {
        let got = merge_with(
            &send("A", "B", vec![("Ok", LocalType::End)]),
            &send("A", "B", vec![("No", LocalType::End)]),
            MergeMode::Choice,
        )
        .unwrap();
        assert_eq!(got, send("A", "B", vec![("No", LocalType::End), ("Ok", LocalType::End)]));
        assert!(merge_with(
            &recv("A", "B", vec![("Ok", LocalType::End)]),
            &recv("A", "B", vec![("No", LocalType::End)]),
            MergeMode::Choice
        )
        .is_err());
    }

    #[test]
    fn peers_must_match() {
        let err = merge(&recv("A", "C", vec![("Ok", LocalType::End)]), &recv("B", "C", vec![("Ok", LocalType::End)]))
            .unwrap_err();
        assert_eq!(err.reason, MergeFailure::PeerMismatch);
    }

    #[test]
    fn loops_align_binders() {
        let a = LocalType::rec("X", recv("A", "C", vec![("m", LocalType::var("X"))]));
        let b = LocalType::rec("Y", recv("A", "C", vec![("q", LocalType::End)]));
        let got = merge(&a, &b).unwrap();
        let want = LocalType::rec("Z", recv("A", "C", vec![("m", LocalType::var("Z")), ("q", LocalType::End)]));
        assert!(struct_eq(&got, &want), "{got}");
        assert!(merge(&LocalType::var("X"), &LocalType::var("Y")).is_err());
        assert!(merge(&a, &recv("A", "C", vec![("m", LocalType::End)])).is_err());
    }

    #[test]
    fn merge_all_reports_index() {
        assert_eq!(merge_all(&[LocalType::End]).unwrap(), LocalType::End);
        assert_eq!(merge_all(&[LocalType::End, LocalType::End, LocalType::End]).unwrap(), LocalType::End);
        assert_eq!(merge_all(&[]), Err(MergeAllError::Empty));
        let err = merge_all(&[LocalType::End, LocalType::End, LocalType::var("X")]).unwrap_err();
        assert!(matches!(err, MergeAllError::Failed { index: 2, .. }));
    }

    #[test]
    fn projection_basics() {
        assert_eq!(project(&GlobalType::End, &Role::from("A")).unwrap(), LocalType::End);
        let g = com("A", "B", vec![("Ok", GlobalType::End)]);
        assert_eq!(project(&g, &Role::from("A")).unwrap(), send("A", "B", vec![("Ok", LocalType::End)]));
        assert_eq!(project(&g, &Role::from("B")).unwrap(), recv("A", "B", vec![("Ok", LocalType::End)]));
        assert_eq!(project(&g, &Role::from("C")).unwrap(), LocalType::End);
    }

    #[test]
    fn projection_failure_carries_path() {
        // C learns nothing about A's choice but must act in one branch only.
        let g = com("A", "B", vec![("l", com("B", "C", vec![("x", GlobalType::End)])), ("r", GlobalType::End)]);
        let err = project(&g, &Role::from("C")).unwrap_err();
        assert_eq!(err.path, AstPath::root());
        assert!(matches!(err.source, MergeAllError::Failed { index: 1, .. }));
    }

    #[test]
    fn absent_role_does_not_loop() {
        let ok = vec![(Sort::unit("Ok"), GlobalType::var("X"))];
        let g =
            GlobalType::com("B", "A", vec![(Sort::unit("Ok"), GlobalType::rec("X", GlobalType::com("A", "C", ok)))]);
        let l = project(&g, &Role::new("B")).unwrap();
        assert_eq!(l, LocalType::send("B", "A", vec![(Sort::unit("Ok"), LocalType::End)]));
        let nested = GlobalType::rec(
            "X",
            GlobalType::rec("Y", GlobalType::com("A", "C", vec![(Sort::unit("Ok"), GlobalType::var("X"))])),
        );
        assert_eq!(project(&nested, &Role::new("B")).unwrap(), LocalType::End);
    }
}
