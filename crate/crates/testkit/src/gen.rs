//! Random types. A strategy first draws a [`Skel`], a shape with abstract
//! choices, and a builder then fixes roles, sorts and recursion variables so
//! that the result is well-formed: branch sorts are distinct, senders differ
//! from receivers and every variable is bound and guarded. Shrinking works on
//! the skeleton.

use proptest::prelude::*;

use mpstkit::ast::{GlobalType, LocalType, RecVar, Role, Sort};
use mpstkit::projection::project_all;

/// Branch labels. `Go` carries an int and `Text` a string.
pub const SORTS: [&str; 4] = ["Ok", "Go", "Text", "Stop"];

/// Name used for a protocol-parameter hole.
pub const HOLE: &str = "G";

pub fn sort(i: u8) -> Sort {
    match SORTS[i as usize % SORTS.len()] {
        "Go" => Sort::int("Go"),
        "Text" => Sort::string("Text"),
        name => Sort::unit(name),
    }
}

/// `sort` declarations for every label in [`SORTS`].
pub fn sort_decls() -> String {
    "sort Ok; sort Go(int); sort Text(string); sort Stop;\n".to_string()
}

#[derive(Clone, Debug)]
pub enum Skel {
    End,
    /// A parameter reference; only produced when holes are requested.
    Hole,
    Var(u8),
    Rec(u8, Box<Skel>),
    Com {
        pick: u8,
        branches: Vec<(u8, Skel)>,
    },
}

pub fn skeleton(depth: u32, width: usize, holes: bool) -> BoxedStrategy<Skel> {
    let leaf = if holes {
        prop_oneof![3 => Just(Skel::End), 3 => any::<u8>().prop_map(Skel::Var), 2 => Just(Skel::Hole)].boxed()
    } else {
        prop_oneof![Just(Skel::End), any::<u8>().prop_map(Skel::Var)].boxed()
    };
    if depth == 0 {
        return leaf;
    }
    let inner = skeleton(depth - 1, width, holes);
    prop_oneof![
        2 => leaf,
        1 => (any::<u8>(), inner.clone()).prop_map(|(v, b)| Skel::Rec(v, Box::new(b))),
        4 => (any::<u8>(), prop::collection::vec((any::<u8>(), inner), 1..=width))
            .prop_map(|(pick, branches)| Skel::Com { pick, branches }),
    ]
    .boxed()
}

/// A skeleton whose head is a loop directly around a communication.
pub fn loop_headed_skeleton(depth: u32, width: usize) -> BoxedStrategy<Skel> {
    (any::<u8>(), any::<u8>(), prop::collection::vec((any::<u8>(), skeleton(depth, width, false)), 1..=width))
        .prop_map(|(v, pick, branches)| Skel::Rec(v, Box::new(Skel::Com { pick, branches })))
        .boxed()
}

/// Bound variables in scope, innermost last, with whether a communication
/// separates each binder from the current position.
struct Scope(Vec<(RecVar, bool)>);

impl Scope {
    fn pick(&self, k: u8) -> Option<RecVar> {
        let mut seen: Vec<&RecVar> = Vec::new();
        let mut usable = Vec::new();
        for (v, guarded) in self.0.iter().rev() {
            if seen.contains(&v) {
                continue;
            }
            seen.push(v);
            if *guarded {
                usable.push(v.clone());
            }
        }
        if usable.is_empty() {
            None
        } else {
            Some(usable[k as usize % usable.len()].clone())
        }
    }

    fn guard(&mut self) -> Vec<bool> {
        let saved = self.0.iter().map(|(_, g)| *g).collect();
        self.0.iter_mut().for_each(|(_, g)| *g = true);
        saved
    }

    fn restore(&mut self, saved: Vec<bool>) {
        self.0.iter_mut().zip(saved).for_each(|((_, g), s)| *g = s);
    }
}

fn dedup_branches<T>(branches: &[(u8, Skel)], mut build: impl FnMut(&Skel) -> T) -> Vec<(Sort, T)> {
    let mut out: Vec<(Sort, T)> = Vec::new();
    for (k, s) in branches {
        let srt = sort(*k);
        if out.iter().all(|(x, _)| x.name != srt.name) {
            out.push((srt, build(s)));
        }
    }
    out
}

/// Builds a global type over `roles` (at least two). Variables are drawn
/// from `vars`, so nested loops may shadow each other.
pub fn build_global(s: &Skel, roles: &[&str], vars: &[&str]) -> GlobalType {
    Builder::new(roles, vars, false).go(s, &mut Scope(Vec::new()))
}

/// Like [`build_global`], but after a choice with several branches the
/// sender tells every other role which branch was taken, using the branch
/// sort. Such types project whenever the inner choices do, so most of them
/// survive [`arb_projectable`]'s filter.
pub fn build_global_notified(s: &Skel, roles: &[&str], vars: &[&str]) -> GlobalType {
    Builder::new(roles, vars, true).go(s, &mut Scope(Vec::new()))
}

struct Builder<'a> {
    roles: &'a [&'a str],
    pairs: Vec<(&'a str, &'a str)>,
    vars: &'a [&'a str],
    notify: bool,
}

impl<'a> Builder<'a> {
    fn new(roles: &'a [&'a str], vars: &'a [&'a str], notify: bool) -> Self {
        let pairs = roles.iter().flat_map(|p| roles.iter().filter(move |q| *q != p).map(move |q| (*p, *q))).collect();
        Builder { roles, pairs, vars, notify }
    }

    fn go(&self, s: &Skel, scope: &mut Scope) -> GlobalType {
        match s {
            Skel::End => GlobalType::End,
            Skel::Hole => GlobalType::var(HOLE),
            Skel::Var(k) => scope.pick(*k).map_or(GlobalType::End, |v| GlobalType::Recur { var: v }),
            Skel::Rec(k, body) => {
                let v = RecVar::new(self.vars[*k as usize % self.vars.len()]);
                scope.0.push((v.clone(), false));
                let body = self.go(body, scope);
                scope.0.pop();
                GlobalType::Loop { var: v, body: Box::new(body) }
            }
            Skel::Com { pick, branches } => {
                let (p, q) = self.pairs[*pick as usize % self.pairs.len()];
                let saved = scope.guard();
                let mut bs = dedup_branches(branches, |b| self.go(b, scope));
                scope.restore(saved);
                if self.notify && bs.len() > 1 {
                    for (srt, cont) in &mut bs {
                        for r in self.roles.iter().rev().filter(|r| **r != p && **r != q) {
                            let tail = std::mem::replace(cont, GlobalType::End);
                            *cont = GlobalType::com(p, *r, vec![(srt.clone(), tail)]);
                        }
                    }
                }
                GlobalType::com(p, q, bs)
            }
        }
    }
}

/// Builds a local type of role `me` talking to `peers`.
pub fn build_local(s: &Skel, me: &str, peers: &[&str], vars: &[&str]) -> LocalType {
    fn go(s: &Skel, me: &str, peers: &[&str], vars: &[&str], scope: &mut Scope) -> LocalType {
        match s {
            Skel::End | Skel::Hole => LocalType::End,
            Skel::Var(k) => scope.pick(*k).map_or(LocalType::End, |v| LocalType::Recur { var: v }),
            Skel::Rec(k, body) => {
                let v = RecVar::new(vars[*k as usize % vars.len()]);
                scope.0.push((v.clone(), false));
                let body = go(body, me, peers, vars, scope);
                scope.0.pop();
                LocalType::Loop { var: v, body: Box::new(body) }
            }
            Skel::Com { pick, branches } => {
                let peer = peers[(*pick >> 1) as usize % peers.len()];
                let saved = scope.guard();
                let bs = dedup_branches(branches, |b| go(b, me, peers, vars, scope));
                scope.restore(saved);
                if pick & 1 == 0 {
                    LocalType::send(me, peer, bs)
                } else {
                    LocalType::recv(peer, me, bs)
                }
            }
        }
    }
    go(s, me, peers, vars, &mut Scope(Vec::new()))
}

pub const VARS: [&str; 2] = ["X", "Y"];

pub fn arb_global(roles: &'static [&'static str]) -> BoxedStrategy<GlobalType> {
    skeleton(5, 3, false).prop_map(move |s| build_global(&s, roles, &VARS)).boxed()
}

/// Global types that project onto every role. Half are drawn freely and
/// filtered, half are built with notifications.
pub fn arb_projectable(roles: &'static [&'static str]) -> BoxedStrategy<GlobalType> {
    let notified = skeleton(5, 3, false).prop_map(move |s| build_global_notified(&s, roles, &VARS));
    prop_oneof![arb_global(roles), notified].prop_filter("projectable", |g| project_all(g).is_ok()).boxed()
}

pub fn arb_local(me: &'static str, peers: &'static [&'static str]) -> BoxedStrategy<LocalType> {
    skeleton(5, 3, false).prop_map(move |s| build_local(&s, me, peers, &VARS)).boxed()
}

pub fn arb_loop_headed_local(me: &'static str, peers: &'static [&'static str]) -> BoxedStrategy<LocalType> {
    loop_headed_skeleton(4, 3).prop_map(move |s| build_local(&s, me, peers, &VARS)).boxed()
}

/// Role list helper.
pub fn roles(names: &[&str]) -> Vec<Role> {
    names.iter().map(|n| Role::new(*n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use mpstkit::ast::well_formed;
    use proptest::test_runner::TestRunner;

    #[test]
    fn generated_types_are_well_formed() {
        let mut runner = TestRunner::default();
        runner
            .run(&arb_global(&["A", "B", "C"]), |g| {
                prop_assert!(well_formed(&g).is_ok(), "{g}");
                Ok(())
            })
            .unwrap();
        runner
            .run(&arb_local("A", &["B", "C"]), |l| {
                prop_assert!(well_formed(&l).is_ok(), "{l}");
                Ok(())
            })
            .unwrap();
    }
}
