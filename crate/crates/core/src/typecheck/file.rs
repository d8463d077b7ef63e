use std::collections::BTreeSet;

use crate::ast::{alpha_normalize, struct_eq, well_formed, GlobalType, LocalType, Role};
use crate::projection::project;
use crate::surface::{elaborate_local, instantiate_ref, resolve_sort, ProcDef, ProtocolFile, SurfaceError};

use super::{check_process, Diagnostic, ErrorClass, Pos, SortTable, TypingEnv};

/// One session a process takes part in, fully elaborated.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionBinding {
    pub var: String,
    pub role: Role,
    pub global: GlobalType,
    pub local: LocalType,
    pub pos: Pos,
}

fn invalid(e: &SurfaceError) -> Diagnostic {
    let msg = e.to_string();
    let msg = msg.strip_prefix(&format!("{}: ", e.pos())).unwrap_or(&msg).to_string();
    Diagnostic::error(ErrorClass::InvalidDefinition, e.pos(), msg)
}

/// All declared sorts, resolved. Declarations that fail to resolve are
/// reported and left out.
pub fn sort_table(file: &ProtocolFile) -> (SortTable, Vec<Diagnostic>) {
    let mut table = SortTable::new();
    let mut diags = Vec::new();
    for s in &file.sorts {
        match resolve_sort(file, &s.name) {
            Ok(sort) => {
                table.insert(s.name.clone(), sort);
            }
            Err(e) => diags.push(invalid(&e)),
        }
    }
    (table, diags)
}

/// Elaborates the sessions a process plays in.
pub fn proc_sessions(file: &ProtocolFile, proc: &ProcDef) -> Result<Vec<SessionBinding>, Diagnostic> {
    let mut out = Vec::new();
    for spec in &proc.sessions {
        let global = instantiate_ref(file, &spec.proto).map_err(|e| invalid(&e))?;
        if let Err(errs) = well_formed(&global) {
            let msg = errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            return Err(Diagnostic::error(ErrorClass::IllFormedProtocol, spec.pos, msg));
        }
        let role = Role::new(spec.role.as_str());
        if !global.roles().contains(&role) {
            return Err(Diagnostic::error(
                ErrorClass::InvalidDefinition,
                spec.pos,
                format!("role {role} does not occur in the protocol"),
            ));
        }
        let local = project(&global, &role)
            .map_err(|e| Diagnostic::error(ErrorClass::Unprojectable, spec.pos, e.to_string()))?;
        out.push(SessionBinding { var: spec.var.clone(), role, global, local, pos: spec.pos });
    }
    Ok(out)
}

/// Checks one process definition.
pub fn check_proc(file: &ProtocolFile, proc: &ProcDef, sorts: &SortTable) -> Vec<Diagnostic> {
    let sessions = match proc_sessions(file, proc) {
        Ok(s) => s,
        Err(d) => return vec![d],
    };
    let env = sessions.into_iter().fold(TypingEnv::new(), |env, b| env.with_session(b.var, b.role, b.local));
    check_process(&env, &proc.body, sorts).err().unwrap_or_default()
}

/// Checks a whole file: well-formedness of every closed global definition,
/// `local` assertions, and every process against its projections. Roles of
/// a protocol that no process plays are reported as warnings.
pub fn check_file(file: &ProtocolFile) -> Vec<Diagnostic> {
    let (sorts, mut diags) = sort_table(file);

    for g in file.globals.iter().filter(|g| g.params.is_empty()) {
        let body = crate::surface::TypeExpr::Ref { pos: g.pos, name: g.name.clone(), args: Vec::new() };
        match instantiate_ref(file, &body) {
            Ok(t) => {
                if let Err(errs) = well_formed(&t) {
                    for e in errs {
                        diags.push(Diagnostic::error(ErrorClass::IllFormedProtocol, g.pos, format!("{}: {e}", g.name)));
                    }
                }
            }
            Err(e) => diags.push(invalid(&e)),
        }
    }

    for l in &file.locals {
        let checked = instantiate_ref(file, &l.of).and_then(|g| Ok((g, elaborate_local(file, &l.body)?)));
        let (g, asserted) = match checked {
            Ok(x) => x,
            Err(e) => {
                diags.push(invalid(&e));
                continue;
            }
        };
        match project(&g, &Role::new(l.role.as_str())) {
            Ok(p) if struct_eq(&p, &asserted) => {}
            Ok(p) => diags.push(Diagnostic::mismatch(
                ErrorClass::LocalTypeMismatch,
                l.pos,
                format!("the projection onto {}: {p}", l.role),
                format!("{}: {asserted}", l.name),
            )),
            Err(e) => diags.push(Diagnostic::error(ErrorClass::Unprojectable, l.pos, e.to_string())),
        }
    }

    // protocols in use, keyed by normalized global type, with the roles played
    let mut used: Vec<(GlobalType, Pos, BTreeSet<Role>)> = Vec::new();
    for p in &file.procs {
        diags.extend(check_proc(file, p, &sorts));
        if let Ok(sessions) = proc_sessions(file, p) {
            for b in sessions {
                let key = alpha_normalize(&b.global);
                match used.iter_mut().find(|(g, ..)| *g == key) {
                    Some((_, _, roles)) => {
                        roles.insert(b.role);
                    }
                    None => used.push((key, b.pos, BTreeSet::from([b.role]))),
                }
            }
        }
    }
    for (g, pos, played) in used {
        for r in g.roles().into_iter().filter(|r| !played.contains(r)) {
            diags.push(Diagnostic::warning(ErrorClass::UnimplementedRole, pos, format!("no process plays role {r}")));
        }
    }

    diags.sort_by_key(|d| d.pos);
    diags
}
