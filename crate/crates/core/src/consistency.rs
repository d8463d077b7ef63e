//! Pairwise consistency of global types.
//!
//! For each ordered pair of roles `(r1, r2)`, the projection onto `r1` is
//! restricted to the actions it shares with `r2` (and vice versa) and the two
//! restrictions must be dual.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::ast::{alpha_normalize, free_vars, unfold, GlobalType, LocalType, RecursiveType, Role};
use crate::projection::{merge_all_with, project, MergeAllError, MergeMode};

/// Keeps only the actions whose peer is `partner`.
///
/// An erased action is replaced by the merge of its restricted continuations,
/// unioning the branches of both sends and receives; the duality check that
/// follows decides whether the two sides agree on them. Alternatives that
/// differ in shape (a receive against `end`, say) do not merge. A loop that
/// never talks to `partner` restricts to `end`.
pub fn restrict_to_partner(l: &LocalType, partner: &Role) -> Result<LocalType, MergeAllError> {
    match l {
        LocalType::Send { branches, .. } | LocalType::Recv { branches, .. } => {
            let restricted = branches
                .iter()
                .map(|(s, c)| Ok((s.clone(), restrict_to_partner(c, partner)?)))
                .collect::<Result<Vec<_>, MergeAllError>>()?;
            if l.peer() == Some(partner) {
                Ok(l.with_branches(restricted))
            } else {
                let conts: Vec<LocalType> = restricted.into_iter().map(|(_, c)| c).collect();
                merge_all_with(&conts, MergeMode::Union)
            }
        }
        LocalType::End | LocalType::Recur { .. } => Ok(l.clone()),
        LocalType::Loop { var, body } => {
            let fv = free_vars(body.as_ref());
            if !talks_to(body, partner) && fv.iter().all(|v| v == var) {
                return Ok(LocalType::End);
            }
            Ok(LocalType::Loop { var: var.clone(), body: Box::new(restrict_to_partner(body, partner)?) })
        }
    }
}

fn talks_to(l: &LocalType, partner: &Role) -> bool {
    match l {
        LocalType::Send { branches, .. } | LocalType::Recv { branches, .. } => {
            l.peer() == Some(partner) || branches.iter().any(|(_, c)| talks_to(c, partner))
        }
        LocalType::Loop { body, .. } => talks_to(body, partner),
        LocalType::End | LocalType::Recur { .. } => false,
    }
}

/// Coinductive duality: every send of one side is a receive on the other with
/// the same sorts, and continuations are again dual. Recursion is unfolded and
/// pairs already under examination are assumed dual.
pub fn dual(a: &LocalType, b: &LocalType) -> bool {
    let mut assumed = Vec::new();
    dual_rec(a, b, &mut assumed)
}

fn dual_rec(a: &LocalType, b: &LocalType, assumed: &mut Vec<(LocalType, LocalType)>) -> bool {
    let a = alpha_normalize(&unfold(a));
    let b = alpha_normalize(&unfold(b));
    if assumed.iter().any(|(x, y)| *x == a && *y == b) {
        return true;
    }
    assumed.push((a.clone(), b.clone()));
    match (&a, &b) {
        (LocalType::End, LocalType::End) => true,
        (LocalType::Send { from: p1, to: q1, branches: b1 }, LocalType::Recv { from: p2, to: q2, branches: b2 })
        | (LocalType::Recv { from: p1, to: q1, branches: b1 }, LocalType::Send { from: p2, to: q2, branches: b2 }) => {
            if p1 != p2 || q1 != q2 || b1.len() != b2.len() {
                return false;
            }
            let names1: BTreeSet<&str> = b1.iter().map(|(s, _)| s.name.as_str()).collect();
            let names2: BTreeSet<&str> = b2.iter().map(|(s, _)| s.name.as_str()).collect();
            if names1 != names2 {
                return false;
            }
            b1.iter().all(|(s, c1)| {
                let (s2, c2) = b2.iter().find(|(t, _)| t.name == s.name).expect("same sort names");
                s == s2 && dual_rec(c1, c2, assumed)
            })
        }
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum PairOutcome {
    Dual,
    /// Restrictions exist but are not dual.
    NotDual {
        left: LocalType,
        right: LocalType,
    },
    /// The global type cannot be projected onto `role`.
    Unprojectable {
        role: Role,
        reason: String,
    },
    /// The projection onto `role` could not be restricted to its partner.
    RestrictionFailed {
        role: Role,
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairVerdict {
    pub left: Role,
    pub right: Role,
    #[serde(flatten)]
    pub outcome: PairOutcome,
}

impl PairVerdict {
    pub fn is_dual(&self) -> bool {
        self.outcome == PairOutcome::Dual
    }
}

impl fmt::Display for PairVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pair ({},{}): ", self.left, self.right)?;
        match &self.outcome {
            PairOutcome::Dual => f.write_str("dual"),
            PairOutcome::NotDual { left, right } => write!(f, "not dual: `{left}` vs `{right}`"),
            PairOutcome::Unprojectable { role, reason } => write!(f, "unprojectable onto {role}: {reason}"),
            PairOutcome::RestrictionFailed { role, reason } => write!(f, "restriction of {role} failed: {reason}"),
        }
    }
}

/// Per-pair verdicts over all ordered pairs of distinct roles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub pairs: Vec<PairVerdict>,
}

impl ConsistencyReport {
    pub fn failures(&self) -> impl Iterator<Item = &PairVerdict> {
        self.pairs.iter().filter(|p| !p.is_dual())
    }
}

pub fn consistent(g: &GlobalType) -> ConsistencyReport {
    let roles = g.roles();
    let projections: Vec<Result<LocalType, String>> =
        roles.iter().map(|r| project(g, r).map_err(|e| e.to_string())).collect();
    let mut pairs = Vec::new();
    for (i, r1) in roles.iter().enumerate() {
        for (j, r2) in roles.iter().enumerate() {
            if i != j {
                pairs.push(PairVerdict {
                    left: r1.clone(),
                    right: r2.clone(),
                    outcome: check_pair((r1, &projections[i]), (r2, &projections[j])),
                });
            }
        }
    }
    ConsistencyReport { consistent: pairs.iter().all(PairVerdict::is_dual), pairs }
}

// the early-return closure carries a whole outcome as its error
#[allow(clippy::result_large_err)]
fn check_pair(left: (&Role, &Result<LocalType, String>), right: (&Role, &Result<LocalType, String>)) -> PairOutcome {
    let restrict = |(role, proj): (&Role, &Result<LocalType, String>), partner: &Role| {
        let l = proj
            .as_ref()
            .map_err(|reason| PairOutcome::Unprojectable { role: role.clone(), reason: reason.clone() })?;
        restrict_to_partner(l, partner)
            .map_err(|e| PairOutcome::RestrictionFailed { role: role.clone(), reason: e.to_string() })
    };
    let a = match restrict(left, right.0) {
        Ok(a) => a,
        Err(o) => return o,
    };
    let b = match restrict(right, left.0) {
        Ok(b) => b,
        Err(o) => return o,
    };
    if dual(&a, &b) {
        PairOutcome::Dual
    } else {
        PairOutcome::NotDual { left: a, right: b }
    }
}
