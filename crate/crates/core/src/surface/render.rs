//! Pretty-printer producing text that parses back to the same file.

use std::fmt::Write as _;

use super::{Arrow, ParamKind, PayloadExpr, ProtocolFile, TypeExpr};
use crate::typecheck::{ProcessTerm, Term};

pub fn render_file(file: &ProtocolFile) -> String {
    let mut out = String::new();
    for s in &file.sorts {
        let payload = match &s.payload {
            PayloadExpr::None => String::new(),
            PayloadExpr::Int => "(int)".into(),
            PayloadExpr::String => "(string)".into(),
            PayloadExpr::Endpoint { role, proto } => format!("(endpoint[{role}, {}])", render_type(proto)),
        };
        let _ = writeln!(out, "sort {}{payload};", s.name);
    }
    for g in &file.globals {
        let params = if g.params.is_empty() {
            String::new()
        } else {
            let ps: Vec<String> = g
                .params
                .iter()
                .map(|p| {
                    let kind = if p.kind == ParamKind::Role { "role" } else { "protocol" };
                    format!("{}: {kind}", p.name)
                })
                .collect();
            format!("[{}]", ps.join(", "))
        };
        let _ = writeln!(out, "global {}{params} = {};", g.name, render_type(&g.body));
    }
    for l in &file.locals {
        let _ = writeln!(out, "local {} of {} @ {} = {};", l.name, render_type(&l.of), l.role, render_type(&l.body));
    }
    for p in &file.procs {
        let sessions: Vec<String> =
            p.sessions.iter().map(|s| format!("{} in {} as {}", s.role, render_type(&s.proto), s.var)).collect();
        let _ = writeln!(out, "proc {} plays {} {{", p.name, sessions.join(", "));
        render_process(&p.body, 1, &mut out);
        out.push_str("\n}\n");
    }
    out
}

pub fn render_type(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Com { arrow, from, to, branches, .. } => {
            let op = match arrow {
                Arrow::Global => ":",
                Arrow::Send => "!",
                Arrow::Recv => "?",
            };
            let bs: Vec<String> = branches.iter().map(|b| format!("{} . {}", b.sort, render_type(&b.cont))).collect();
            if bs.len() == 1 {
                format!("{from} -> {to} {op} {}", bs[0])
            } else {
                format!("{from} -> {to} {op} {{ {} }}", bs.join(", "))
            }
        }
        TypeExpr::End { .. } => "end".into(),
        TypeExpr::Rec { var, body, .. } => format!("rec {var} . {}", render_type(body)),
        TypeExpr::Ref { name, args, .. } if args.is_empty() => name.clone(),
        TypeExpr::Ref { name, args, .. } => {
            let a: Vec<String> = args.iter().map(render_type).collect();
            format!("{name}[{}]", a.join(", "))
        }
    }
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn render_process(p: &ProcessTerm, depth: usize, out: &mut String) {
    indent(depth, out);
    match &p.term {
        Term::End => out.push_str("end"),
        Term::Send { session, to, payload, cont } => {
            let _ = writeln!(out, "{session}.send {to} {payload};");
            render_process(cont, depth, out);
        }
        Term::Recv { session, from, arms } => {
            let _ = writeln!(out, "{session}.recv {from} {{");
            for (i, arm) in arms.iter().enumerate() {
                indent(depth + 1, out);
                let var = arm.var.as_deref().map(|v| format!("({v})")).unwrap_or_default();
                let _ = writeln!(out, "{}{var} ->", arm.sort);
                render_process(&arm.body, depth + 2, out);
                out.push_str(if i + 1 < arms.len() { ",\n" } else { "\n" });
            }
            indent(depth, out);
            out.push('}');
        }
        Term::Loop { session, label, body } => {
            let _ = writeln!(out, "{session}.loop {label} {{");
            render_process(body, depth + 1, out);
            out.push('\n');
            indent(depth, out);
            out.push('}');
        }
        Term::Recur { label, session, cont } => {
            let _ = write!(out, "recur {label}");
            if let Some(s) = session {
                let _ = write!(out, "({s})");
            }
            if let Some(c) = cont {
                out.push_str(";\n");
                render_process(c, depth, out);
            }
        }
        Term::If { cond, then, els } => {
            let _ = writeln!(out, "if {cond} {{");
            render_process(then, depth + 1, out);
            out.push('\n');
            indent(depth, out);
            out.push_str("} else {\n");
            render_process(els, depth + 1, out);
            out.push('\n');
            indent(depth, out);
            out.push('}');
        }
        Term::Let { name, value, cont } => {
            let _ = writeln!(out, "let {name} = {value};");
            render_process(cont, depth, out);
        }
    }
}
