use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{LocalType, Payload, RecVar, RecursiveType, Role};

/// One step from a node to a child.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "step", content = "index", rename_all = "lowercase")]
pub enum PathStep {
    /// Continuation of the n-th branch of an action.
    Branch(usize),
    /// Body of a `Loop`.
    Body,
}

/// Location of a node inside a type, from the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct AstPath(pub Vec<PathStep>);

impl AstPath {
    pub fn root() -> Self {
        AstPath(Vec::new())
    }

    pub fn child(&self, step: PathStep) -> Self {
        let mut steps = self.0.clone();
        steps.push(step);
        AstPath(steps)
    }
}

impl fmt::Display for AstPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for step in &self.0 {
            match step {
                PathStep::Branch(i) => write!(f, "/branch[{i}]")?,
                PathStep::Body => f.write_str("/loop")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    SelfCommunication {
        role: Role,
    },
    EmptyBranches,
    DuplicateSort {
        sort: String,
    },
    UnboundRecursionVariable {
        var: RecVar,
    },
    NonContractive {
        var: RecVar,
    },
    InvalidRoleName {
        role: Role,
    },
    /// A delegated endpoint sort carries an ill-formed local type.
    MalformedEndpointSort {
        sort: String,
        detail: Box<Violation>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfCommunication { role } => write!(f, "sender equals receiver ({role})"),
            Violation::EmptyBranches => f.write_str("communication without branches"),
            Violation::DuplicateSort { sort } => write!(f, "duplicate branch sort {sort}"),
            Violation::UnboundRecursionVariable { var } => write!(f, "unbound recursion variable {var}"),
            Violation::NonContractive { var } => write!(f, "non-contractive recursion on {var}"),
            Violation::InvalidRoleName { role } => write!(f, "invalid role name {role:?}"),
            Violation::MalformedEndpointSort { sort, detail } => {
                write!(f, "endpoint sort {sort} carries an ill-formed type: {detail}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WfError {
    pub path: AstPath,
    pub violation: Violation,
}

impl fmt::Display for WfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.violation, self.path)
    }
}

/// Checks distinct roles per action, non-empty and pairwise distinct branch
/// sorts, closedness and contractivity. Returns every violation found.
pub fn well_formed<T: RecursiveType>(t: &T) -> Result<(), Vec<WfError>> {
    let mut errors = Vec::new();
    check(t, &AstPath::root(), &mut Vec::new(), &BTreeSet::new(), &mut errors);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

fn check<T: RecursiveType>(
    t: &T,
    path: &AstPath,
    bound: &mut Vec<RecVar>,
    unguarded: &BTreeSet<RecVar>,
    errors: &mut Vec<WfError>,
) {
    let mut report = |violation| errors.push(WfError { path: path.clone(), violation });
    if let Some(v) = t.as_recur() {
        if !bound.contains(v) {
            report(Violation::UnboundRecursionVariable { var: v.clone() });
        } else if unguarded.contains(v) {
            report(Violation::NonContractive { var: v.clone() });
        }
        return;
    }
    if let Some((v, body)) = t.as_loop() {
        // an inner binder of the same name shadows the outer one
        let mut inner: BTreeSet<RecVar> = unguarded.clone();
        inner.insert(v.clone());
        bound.push(v.clone());
        check(body, &path.child(PathStep::Body), bound, &inner, errors);
        bound.pop();
        return;
    }
    let Some((from, to)) = t.action_roles() else { return };
    for r in [from, to] {
        if !Role::is_valid_name(r.name()) {
            report(Violation::InvalidRoleName { role: r.clone() });
        }
    }
    if from == to {
        report(Violation::SelfCommunication { role: from.clone() });
    }
    let branches = t.branches();
    if branches.is_empty() {
        report(Violation::EmptyBranches);
    }
    let mut seen = BTreeSet::new();
    for (sort, _) in branches {
        if !seen.insert(sort.name.as_str()) {
            report(Violation::DuplicateSort { sort: sort.name.clone() });
        }
        if let Payload::Endpoint { local, .. } = &sort.payload {
            if let Err(inner) = well_formed::<LocalType>(local) {
                for e in inner {
                    report(Violation::MalformedEndpointSort { sort: sort.name.clone(), detail: Box::new(e.violation) });
                }
            }
        }
    }
    let guarded = BTreeSet::new();
    for (i, (_, cont)) in branches.iter().enumerate() {
        check(cont, &path.child(PathStep::Branch(i)), bound, &guarded, errors);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{GlobalType, Sort};

    fn com(from: &str, to: &str, bs: Vec<(&str, GlobalType)>) -> GlobalType {
        GlobalType::com(from, to, bs.into_iter().map(|(s, c)| (Sort::unit(s), c)).collect())
    }

    fn violations(g: &GlobalType) -> Vec<Violation> {
        well_formed(g).err().unwrap_or_default().into_iter().map(|e| e.violation).collect()
    }

    #[test]
    fn self_communication() {
        let v = violations(&com("A", "A", vec![("Ok", GlobalType::End)]));
        assert_eq!(v, vec![Violation::SelfCommunication { role: Role::from("A") }]);
        assert!(v[0].to_string().starts_with("sender equals receiver"));
    }

    #[test]
    fn unguarded_loop() {
        let v = violations(&GlobalType::rec("X", GlobalType::var("X")));
        assert_eq!(v, vec![Violation::NonContractive { var: RecVar::from("X") }]);
        assert!(v[0].to_string().starts_with("non-contractive recursion"));
    }

    #[test]
    fn unguarded_through_nested_loop() {
        let g = GlobalType::rec("X", GlobalType::rec("Y", GlobalType::var("X")));
        assert_eq!(violations(&g), vec![Violation::NonContractive { var: RecVar::from("X") }]);
    }

    #[test]
    fn guarded_loop_is_fine() {
        let g = GlobalType::rec("X", com("A", "B", vec![("m", GlobalType::var("X")), ("q", GlobalType::End)]));
        assert!(well_formed(&g).is_ok());
    }

    #[test]
    fn free_and_duplicate_reported_with_paths() {
        let g = com("A", "B", vec![("m", GlobalType::var("Z")), ("m", GlobalType::End)]);
        let errs = well_formed(&g).unwrap_err();
        assert_eq!(errs.len(), 2);
        assert_eq!(errs[0].violation, Violation::DuplicateSort { sort: "m".into() });
        assert_eq!(errs[0].path, AstPath::root());
        assert_eq!(errs[1].violation, Violation::UnboundRecursionVariable { var: RecVar::from("Z") });
        assert_eq!(errs[1].path.to_string(), "/branch[0]");
    }

    #[test]
    fn empty_branches() {
        assert_eq!(violations(&com("A", "B", vec![])), vec![Violation::EmptyBranches]);
    }
}
