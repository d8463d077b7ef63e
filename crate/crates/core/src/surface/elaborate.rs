//! From surface type expressions to [`GlobalType`]/[`LocalType`] values.

use std::collections::{BTreeSet, HashMap};

use super::{Arrow, ParamKind, PayloadExpr, ProtocolFile, SurfaceError, TypeExpr};
use crate::ast::{free_vars, GlobalType, LocalType, RecVar, Role, Sort};
use crate::projection::project;
use crate::typecheck::Pos;

/// An argument of a generic definition.
#[derive(Clone, Debug, PartialEq)]
pub enum Arg {
    Role(Role),
    Protocol(GlobalType),
}

/// Expands definition `name` applied to `args`. Parameters are substituted
/// without capture: a binder of the definition that would capture a free
/// variable of a protocol argument is renamed.
pub fn instantiate(file: &ProtocolFile, name: &str, args: &[Arg]) -> Result<GlobalType, SurfaceError> {
    let mut el = Elaborator { file, stack: Vec::new() };
    let def = file.global(name).ok_or_else(|| SurfaceError::Unbound { pos: Pos::default(), name: name.to_string() })?;
    if def.params.len() != args.len() {
        return Err(SurfaceError::Arity {
            pos: def.pos,
            name: name.into(),
            expected: def.params.len(),
            found: args.len(),
        });
    }
    let mut env = Env::default();
    for (p, a) in def.params.iter().zip(args) {
        match (p.kind, a) {
            (ParamKind::Role, Arg::Role(r)) => {
                env.roles.insert(p.name.clone(), r.clone());
            }
            (ParamKind::Protocol, Arg::Protocol(g)) => {
                env.avoid.extend(free_vars(g));
                env.protos.insert(p.name.clone(), g.clone());
            }
            (kind, _) => return Err(SurfaceError::Kind { pos: def.pos, param: p.name.clone(), kind }),
        }
    }
    el.stack.push(name.to_string());
    el.global(&def.body, &mut env)
}

/// Elaborates a closed global type expression, typically a reference such
/// as `S` or `T[A, B]`.
pub fn instantiate_ref(file: &ProtocolFile, expr: &TypeExpr) -> Result<GlobalType, SurfaceError> {
    Elaborator { file, stack: Vec::new() }.global(expr, &mut Env::default())
}

/// Elaborates the body of a `local` definition.
pub fn elaborate_local(file: &ProtocolFile, expr: &TypeExpr) -> Result<LocalType, SurfaceError> {
    Elaborator { file, stack: Vec::new() }.local(expr, &mut Vec::new())
}

/// The sort declared under `name`; undeclared sorts carry no payload.
pub fn resolve_sort(file: &ProtocolFile, name: &str) -> Result<Sort, SurfaceError> {
    Elaborator { file, stack: Vec::new() }.sort(name, Pos::default())
}

/// Parameterless global definitions not used by any other definition.
pub fn roots(file: &ProtocolFile) -> Vec<&str> {
    fn refs<'a>(e: &'a TypeExpr, out: &mut BTreeSet<&'a str>) {
        match e {
            TypeExpr::Com { branches, .. } => branches.iter().for_each(|b| refs(&b.cont, out)),
            TypeExpr::Rec { body, .. } => refs(body, out),
            TypeExpr::Ref { name, args, .. } => {
                out.insert(name);
                args.iter().for_each(|a| refs(a, out));
            }
            TypeExpr::End { .. } => {}
        }
    }
    let mut used = BTreeSet::new();
    for g in &file.globals {
        let mut mine = BTreeSet::new();
        refs(&g.body, &mut mine);
        mine.remove(g.name.as_str());
        used.extend(mine);
    }
    file.globals
        .iter()
        .filter(|g| g.params.is_empty() && !used.contains(g.name.as_str()))
        .map(|g| g.name.as_str())
        .collect()
}

#[derive(Default)]
struct Env {
    roles: HashMap<String, Role>,
    protos: HashMap<String, GlobalType>,
    /// Source binder name to the variable actually used.
    recs: Vec<(String, RecVar)>,
    /// Free variables of protocol arguments; binders must not capture them.
    avoid: BTreeSet<RecVar>,
}

impl Env {
    fn role(&self, name: &str) -> Role {
        self.roles.get(name).cloned().unwrap_or_else(|| Role::new(name))
    }

    fn rec(&self, name: &str) -> Option<&RecVar> {
        self.recs.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn bind(&mut self, name: &str) -> RecVar {
        let mut var = RecVar::new(name);
        let mut i = 1;
        while self.avoid.contains(&var) {
            var = RecVar::new(format!("{name}_{i}"));
            i += 1;
        }
        self.recs.push((name.to_string(), var.clone()));
        var
    }
}

struct Elaborator<'a> {
    file: &'a ProtocolFile,
    /// Definitions and sorts currently being expanded, for cycle detection.
    stack: Vec<String>,
}

impl Elaborator<'_> {
    fn enter(&mut self, key: String, pos: Pos, name: &str) -> Result<(), SurfaceError> {
        if self.stack.contains(&key) {
            return Err(SurfaceError::Cyclic { pos, name: name.to_string() });
        }
        self.stack.push(key);
        Ok(())
    }

    fn sort(&mut self, name: &str, pos: Pos) -> Result<Sort, SurfaceError> {
        let Some(decl) = self.file.sort(name) else { return Ok(Sort::unit(name)) };
        Ok(match &decl.payload {
            PayloadExpr::None => Sort::unit(name),
            PayloadExpr::Int => Sort::int(name),
            PayloadExpr::String => Sort::string(name),
            PayloadExpr::Endpoint { role, proto } => {
                self.enter(format!("sort {name}"), pos, name)?;
                let g = self.global(proto, &mut Env::default())?;
                self.stack.pop();
                let role = Role::new(role.as_str());
                let local = project(&g, &role).map_err(|e| SurfaceError::EndpointSort {
                    pos: decl.pos,
                    sort: name.into(),
                    message: e.to_string(),
                })?;
                Sort::endpoint(name, role, local)
            }
        })
    }

    fn global(&mut self, e: &TypeExpr, env: &mut Env) -> Result<GlobalType, SurfaceError> {
        match e {
            TypeExpr::Com { pos, arrow, from, to, branches } => {
                if *arrow != Arrow::Global {
                    return Err(SurfaceError::Arrow {
                        pos: *pos,
                        message: "local action in a global type (use `:`)".into(),
                    });
                }
                let mut bs = Vec::with_capacity(branches.len());
                for b in branches {
                    bs.push((self.sort(&b.sort, b.pos)?, self.global(&b.cont, env)?));
                }
                Ok(GlobalType::Com { from: env.role(from), to: env.role(to), branches: bs })
            }
            TypeExpr::End { .. } => Ok(GlobalType::End),
            TypeExpr::Rec { var, body, .. } => {
                let actual = env.bind(var);
                let body = self.global(body, env);
                env.recs.pop();
                Ok(GlobalType::Loop { var: actual, body: Box::new(body?) })
            }
            TypeExpr::Ref { pos, name, args } => {
                if args.is_empty() {
                    if let Some(v) = env.rec(name) {
                        return Ok(GlobalType::Recur { var: v.clone() });
                    }
                    if let Some(g) = env.protos.get(name) {
                        return Ok(g.clone());
                    }
                }
                if env.roles.contains_key(name) {
                    return Err(SurfaceError::Kind { pos: *pos, param: name.clone(), kind: ParamKind::Protocol });
                }
                let Some(def) = self.file.global(name) else {
                    return Err(SurfaceError::Unbound { pos: *pos, name: name.clone() });
                };
                if def.params.len() != args.len() {
                    return Err(SurfaceError::Arity {
                        pos: *pos,
                        name: name.clone(),
                        expected: def.params.len(),
                        found: args.len(),
                    });
                }
                let mut callee = Env::default();
                for (p, a) in def.params.iter().zip(args) {
                    match p.kind {
                        ParamKind::Role => match a {
                            TypeExpr::Ref { name: r, args, .. }
                                if args.is_empty() && env.rec(r).is_none() && !env.protos.contains_key(r) =>
                            {
                                callee.roles.insert(p.name.clone(), env.role(r));
                            }
                            _ => {
                                return Err(SurfaceError::Kind {
                                    pos: a.pos(),
                                    param: p.name.clone(),
                                    kind: ParamKind::Role,
                                })
                            }
                        },
                        ParamKind::Protocol => {
                            let g = self.global(a, env)?;
                            callee.avoid.extend(free_vars(&g));
                            callee.protos.insert(p.name.clone(), g);
                        }
                    }
                }
                self.enter(format!("global {name}"), *pos, name)?;
                let out = self.global(&def.body, &mut callee);
                self.stack.pop();
                out
            }
        }
    }

    fn local(&mut self, e: &TypeExpr, recs: &mut Vec<String>) -> Result<LocalType, SurfaceError> {
        match e {
            TypeExpr::Com { pos, arrow, from, to, branches } => {
                let mut bs = Vec::with_capacity(branches.len());
                for b in branches {
                    bs.push((self.sort(&b.sort, b.pos)?, self.local(&b.cont, recs)?));
                }
                let (from, to) = (Role::new(from.as_str()), Role::new(to.as_str()));
                match arrow {
                    Arrow::Send => Ok(LocalType::Send { from, to, branches: bs }),
                    Arrow::Recv => Ok(LocalType::Recv { from, to, branches: bs }),
                    Arrow::Global => Err(SurfaceError::Arrow {
                        pos: *pos,
                        message: "global communication in a local type (use `!` or `?`)".into(),
                    }),
                }
            }
            TypeExpr::End { .. } => Ok(LocalType::End),
            TypeExpr::Rec { var, body, .. } => {
                recs.push(var.clone());
                let body = self.local(body, recs);
                recs.pop();
                Ok(LocalType::Loop { var: RecVar::new(var.as_str()), body: Box::new(body?) })
            }
            TypeExpr::Ref { pos, name, args } => {
                if args.is_empty() && recs.contains(name) {
                    Ok(LocalType::Recur { var: RecVar::new(name.as_str()) })
                } else {
                    Err(SurfaceError::Unbound { pos: *pos, name: name.clone() })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::struct_eq;
    use crate::surface::parse_protocol_file;

    const GENERIC: &str = "
        global T[P: role, Q: role] = P -> Q : Propose . rec X . U[Q, P, U[P, Q, X]];
        global U[P: role, Q: role, G: protocol] =
          P -> Q : { Accept . Q -> P : Confirm . end, Reject . end, Propose . G };
        global S = A -> B : Propose . rec X . B -> A : {
            Accept . A -> B : Confirm . end,
            Reject . end,
            Propose . A -> B : { Accept . B -> A : Confirm . end, Reject . end, Propose . X } };
    ";

    #[test]
    fn generic_instantiation_matches_hand_written() {
        let f = parse_protocol_file(GENERIC).unwrap();
        let t = instantiate(&f, "T", &[Arg::Role("A".into()), Arg::Role("B".into())]).unwrap();
        let s = instantiate(&f, "S", &[]).unwrap();
        assert!(struct_eq(&t, &s), "{t}\n{s}");
    }

    #[test]
    fn parameterless_is_verbatim() {
        let f = parse_protocol_file("global E = A -> B : Ok . end;").unwrap();
        let g = instantiate(&f, "E", &[]).unwrap();
        assert_eq!(g, GlobalType::com("A", "B", vec![(Sort::unit("Ok"), GlobalType::End)]));
    }

    #[test]
    fn binder_does_not_capture_argument() {
        let f = parse_protocol_file(
            "global W[G: protocol] = rec X . A -> B : { More . X, Done . G };
             global M = rec X . C -> A : Go . W[X];",
        )
        .unwrap();
        let g = instantiate(&f, "M", &[]).unwrap();
        let want = GlobalType::rec(
            "X",
            GlobalType::com(
                "C",
                "A",
                vec![(
                    Sort::unit("Go"),
                    GlobalType::rec(
                        "Y",
                        GlobalType::com(
                            "A",
                            "B",
                            vec![
                                (Sort::unit("More"), GlobalType::var("Y")),
                                (Sort::unit("Done"), GlobalType::var("X")),
                            ],
                        ),
                    ),
                )],
            ),
        );
        assert!(struct_eq(&g, &want), "{g}");
    }

    #[test]
    fn errors() {
        let f = parse_protocol_file(
            "global U[P: role, G: protocol] = P -> B : Ok . G;
             global Bad1 = U[A];
             global Bad2 = U[A -> B : Ok . end, end];
             global Bad3 = Nope;
             global Loop1 = A -> B : Ok . Loop1;
             global Bad4 = A -> B ! Ok . end;",
        )
        .unwrap();
        let err = |n| instantiate(&f, n, &[]).unwrap_err();
        assert!(matches!(err("Bad1"), SurfaceError::Arity { expected: 2, found: 1, .. }));
        assert!(matches!(err("Bad2"), SurfaceError::Kind { kind: ParamKind::Role, .. }));
        assert!(matches!(err("Bad3"), SurfaceError::Unbound { .. }));
        assert!(matches!(err("Loop1"), SurfaceError::Cyclic { .. }));
        assert!(matches!(err("Bad4"), SurfaceError::Arrow { .. }));
    }

    #[test]
    fn endpoint_sorts_project() {
        let f = parse_protocol_file(
            "sort D(endpoint[B, T]); sort N(int);
             global T = A -> B : N . end;",
        )
        .unwrap();
        let d = resolve_sort(&f, "D").unwrap();
        let want = LocalType::recv("A", "B", vec![(Sort::int("N"), LocalType::End)]);
        assert_eq!(d, Sort::endpoint("D", Role::from("B"), want));
        assert_eq!(resolve_sort(&f, "Undeclared").unwrap(), Sort::unit("Undeclared"));
    }

    #[test]
    fn roots_skip_used_and_generic() {
        let f = parse_protocol_file(GENERIC).unwrap();
        assert_eq!(roots(&f), vec!["S"]);
    }
}
