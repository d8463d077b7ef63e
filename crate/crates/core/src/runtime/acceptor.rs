//! Replays traces against the asynchronous semantics of a global type.
//!
//! This is kept apart from projection and type checking: states are
//! global types with messages in flight, and an action may overtake a
//! pending communication when its subject is not involved in it.

use std::fmt;

use thiserror::Error;

use crate::ast::{unfold, GlobalType, Role};

use super::{EventKind, TraceEvent};

/// An observable action: a send or a receive of a sort between two roles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub kind: EventKind,
    pub from: Role,
    pub to: Role,
    pub sort: String,
}

impl Step {
    pub fn send(from: impl Into<Role>, to: impl Into<Role>, sort: impl Into<String>) -> Self {
        Step { kind: EventKind::Send, from: from.into(), to: to.into(), sort: sort.into() }
    }

    pub fn recv(from: impl Into<Role>, to: impl Into<Role>, sort: impl Into<String>) -> Self {
        Step { kind: EventKind::Recv, from: from.into(), to: to.into(), sort: sort.into() }
    }

    fn subject(&self) -> &Role {
        match self.kind {
            EventKind::Send => &self.from,
            EventKind::Recv => &self.to,
        }
    }
}

impl From<&TraceEvent> for Step {
    fn from(e: &TraceEvent) -> Self {
        Step { kind: e.kind, from: e.from.clone(), to: e.to.clone(), sort: e.sort.clone() }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.kind == EventKind::Send { '!' } else { '?' };
        write!(f, "{}{}{op}{}", self.from, self.to, self.sort)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Config {
    /// Not yet expanded.
    Pending(GlobalType),
    Com {
        from: Role,
        to: Role,
        branches: Vec<(String, Config)>,
    },
    InFlight {
        from: Role,
        to: Role,
        sort: String,
        cont: Box<Config>,
    },
    End,
}

fn expand(c: Config) -> Config {
    match c {
        Config::Pending(g) => match unfold(&g) {
            GlobalType::Com { from, to, branches } => Config::Com {
                from,
                to,
                branches: branches.into_iter().map(|(s, g)| (s.name, Config::Pending(g))).collect(),
            },
            // closed, contractive types unfold to a communication or end
            _ => Config::End,
        },
        c => c,
    }
}

fn step(c: Config, a: &Step, fuel: usize) -> Option<Config> {
    match expand(c) {
        Config::End | Config::Pending(_) => None,
        Config::Com { from, to, branches } => {
            if a.kind == EventKind::Send && a.from == from && a.to == to {
                let (sort, cont) = branches.into_iter().find(|(s, _)| *s == a.sort)?;
                return Some(Config::InFlight { from, to, sort, cont: Box::new(cont) });
            }
            if *a.subject() == from || *a.subject() == to || fuel == 0 {
                return None;
            }
            let branches =
                branches.into_iter().map(|(s, b)| step(b, a, fuel - 1).map(|b| (s, b))).collect::<Option<Vec<_>>>()?;
            Some(Config::Com { from, to, branches })
        }
        Config::InFlight { from, to, sort, cont } => {
            if a.kind == EventKind::Recv && a.from == from && a.to == to && a.sort == sort {
                return Some(*cont);
            }
            if *a.subject() == to || fuel == 0 {
                return None;
            }
            let cont = step(*cont, a, fuel - 1)?;
            Some(Config::InFlight { from, to, sort, cont: Box::new(cont) })
        }
    }
}

fn size(g: &GlobalType) -> usize {
    match g {
        GlobalType::Com { branches, .. } => 1 + branches.iter().map(|(_, b)| size(b)).sum::<usize>(),
        GlobalType::Loop { body, .. } => 1 + size(body),
        _ => 1,
    }
}

/// Incremental trace acceptor for one session.
#[derive(Clone, Debug)]
pub struct Acceptor {
    state: Config,
    fuel: usize,
    accepted: usize,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("action {index} ({step}) is not allowed by the protocol")]
pub struct Rejected {
    pub index: usize,
    pub step: String,
}

impl Acceptor {
    /// `g` must be closed and contractive.
    pub fn new(g: &GlobalType) -> Self {
        Acceptor { state: Config::Pending(g.clone()), fuel: 2 * size(g) + 2, accepted: 0 }
    }

    pub fn step(&mut self, a: &Step) -> Result<(), Rejected> {
        let current = std::mem::replace(&mut self.state, Config::End);
        // each accepted action can deepen the state by at most one unfolding
        match step(current.clone(), a, self.fuel * (self.accepted + 1)) {
            Some(next) => {
                self.state = next;
                self.accepted += 1;
                Ok(())
            }
            None => {
                self.state = current;
                Err(Rejected { index: self.accepted, step: a.to_string() })
            }
        }
    }

    /// Whether the protocol has run to completion with no message in flight.
    pub fn is_terminated(&self) -> bool {
        expand(self.state.clone()) == Config::End
    }
}

/// Feeds every step to a fresh acceptor.
pub fn replay<'a>(g: &GlobalType, steps: impl IntoIterator<Item = &'a Step>) -> Result<Acceptor, Rejected> {
    let mut acc = Acceptor::new(g);
    for s in steps {
        acc.step(s)?;
    }
    Ok(acc)
}
