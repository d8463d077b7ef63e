//! Property bodies shared by the proptest suites and the acceptance run.
//! Each returns a description of the first violation.

use std::time::Duration;

use mpstkit::ast::{struct_eq, unfold, GlobalType, LocalType, Role};
use mpstkit::consistency::dual;
use mpstkit::projection::{merge, project, project_all};
use mpstkit::runtime::{replay, run_file, RunOptions, Step};
use mpstkit::typecheck::{check_process, Diagnostic, ErrorClass, Pos, ProcessTerm, TypingEnv};

use crate::oracle::manual_dual;
use crate::synth::{break_process, cycle, Breakage, Synth};
use crate::{corpus, sort_table};

pub type Law = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// For every choice in `g` and every role outside it, the projections of
/// the alternatives: the operands projection has to merge.
pub fn merge_operands(g: &GlobalType) -> Vec<Vec<LocalType>> {
    fn go(g: &GlobalType, out: &mut Vec<Vec<LocalType>>) {
        match g {
            GlobalType::Com { from, to, branches } => {
                for r in g.roles() {
                    if &r != from && &r != to {
                        let ops: Option<Vec<LocalType>> = branches.iter().map(|(_, c)| project(c, &r).ok()).collect();
                        out.extend(ops);
                    }
                }
                branches.iter().for_each(|(_, c)| go(c, out));
            }
            GlobalType::Loop { body, .. } => go(body, out),
            _ => {}
        }
    }
    let mut out = Vec::new();
    go(g, &mut out);
    out
}

/// Idempotence, commutativity (including definedness) and associativity
/// where both sides are defined.
pub fn merge_laws(ops: &[LocalType]) -> Law {
    for a in ops {
        let aa = merge(a, a).map_err(|e| format!("merge({a}, itself): {e}"))?;
        ensure!(struct_eq(&aa, a), "merge({a}, itself) = {aa}");
        for b in ops {
            match (merge(a, b), merge(b, a)) {
                (Ok(x), Ok(y)) => ensure!(struct_eq(&x, &y), "{a} / {b}: {x} vs {y}"),
                (Err(_), Err(_)) => {}
                (x, y) => return Err(format!("{a} / {b}: defined one way only: {x:?} {y:?}")),
            }
            for c in ops {
                let left = merge(a, b).and_then(|ab| merge(&ab, c));
                let right = merge(b, c).and_then(|bc| merge(a, &bc));
                if let (Ok(l), Ok(r)) = (left, right) {
                    ensure!(struct_eq(&l, &r), "({a} ⊓ {b}) ⊓ {c} = {l} but {a} ⊓ ({b} ⊓ {c}) = {r}");
                }
            }
        }
    }
    Ok(())
}

/// Merge laws on every group of operands of a projectable type.
pub fn merge_laws_of(g: &GlobalType) -> Law {
    merge_operands(g).iter().try_for_each(|ops| merge_laws(ops))
}

/// `dual` agrees with the syntactic dual in both directions.
pub fn dual_agrees(l: &LocalType) -> Law {
    let d = manual_dual(l);
    ensure!(dual(l, &d), "{l} vs {d}");
    ensure!(dual(&d, l), "{d} vs {l}");
    Ok(())
}

fn check_as_a(l: &LocalType, p: &ProcessTerm) -> Vec<(ErrorClass, Pos)> {
    let env = TypingEnv::new().with_session("s", Role::new("A"), l.clone());
    match check_process(&env, p, &sort_table()) {
        Ok(()) => vec![],
        Err(ds) => ds.iter().map(|d: &Diagnostic| (d.class, d.pos)).collect(),
    }
}

/// Checking a synthesized process for `l` (role `A`, endpoint `s`) gives
/// the same verdict against `l` and against its unfolding. With no
/// breakage the verdict must be success.
pub fn unfold_stable(l: &LocalType, picks: Vec<u8>, broken: Option<(Breakage, usize)>) -> Law {
    let mut p = Synth::default().implement(l, "s", &mut cycle(picks));
    if let Some((b, at)) = broken {
        if let Some(q) = break_process(&p, b, at) {
            p = q;
        }
    }
    let folded = check_as_a(l, &p);
    let unfolded = check_as_a(&unfold(l), &p);
    ensure!(folded == unfolded, "{l}: {folded:?} vs {unfolded:?}");
    ensure!(broken.is_some() || folded.is_empty(), "{l}: {folded:?}");
    Ok(())
}

/// Runs every fixture with processes and replays each session's trace
/// through the acceptor; finished sessions must be accepted as complete.
pub fn corpus_traces_replay(runs: usize) -> Law {
    for rel in corpus::clean_fixtures() {
        let f = corpus::load(&rel);
        if f.procs.is_empty() {
            continue;
        }
        for _ in 0..runs {
            let r = run_file(&f, &RunOptions { deadline: Some(Duration::from_secs(10)) })
                .map_err(|e| format!("{rel}: {e}"))?;
            ensure!(r.ok(), "{rel}: {:?}", r.root_faults().collect::<Vec<_>>());
            for s in &r.sessions {
                let steps: Vec<Step> = r.trace.session(s.name()).map(Step::from).collect();
                let acc = replay(s.protocol(), &steps).map_err(|e| format!("{rel}: {e}"))?;
                ensure!(acc.is_terminated(), "{rel}: session {} left unfinished", s.name());
            }
        }
    }
    Ok(())
}

/// Projections of a two-role type are each other's syntactic dual.
pub fn two_role_duality(g: &GlobalType) -> Law {
    let ls = project_all(g).map_err(|e| e.to_string())?;
    if let [(_, a), (_, b)] = ls.as_slice() {
        ensure!(struct_eq(&manual_dual(a), b), "{a} vs {b}");
        ensure!(dual(a, b), "{a} vs {b}");
    }
    Ok(())
}
