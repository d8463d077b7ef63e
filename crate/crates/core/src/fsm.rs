//! Finite-state reading of local types.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::ast::{alpha_normalize, unfold, LocalType, Role, Sort};

pub type StateId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Send,
    Recv,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Action {
    pub direction: Direction,
    pub peer: Role,
    #[serde(rename = "self")]
    pub self_role: Role,
    pub sort: Sort,
}

impl Action {
    /// `pq!t` for a send from p to q, `pq?t` for a receive by q from p.
    pub fn label(&self) -> String {
        match self.direction {
            Direction::Send => format!("{}{}!{}", self.self_role, self.peer, self.sort.name),
            Direction::Recv => format!("{}{}?{}", self.peer, self.self_role, self.sort.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub from: StateId,
    pub action: Action,
    pub to: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fsm {
    pub states: Vec<StateId>,
    pub initial: StateId,
    pub finals: BTreeSet<StateId>,
    pub transitions: Vec<Transition>,
}

/// Builds the automaton of `l`. States are the distinct unfolded subterms
/// (up to alpha-renaming), numbered from 1 in breadth-first discovery order.
pub fn interpret(l: &LocalType) -> Fsm {
    let key = |t: &LocalType| alpha_normalize(&unfold(t));
    let mut ids: HashMap<String, StateId> = HashMap::new();
    let mut terms: Vec<LocalType> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |t: LocalType, terms: &mut Vec<LocalType>, queue: &mut VecDeque<StateId>| -> StateId {
        // serialized form is a cheap structural key; normalization makes it canonical
        let k = serde_json::to_string(&t).expect("local types serialize");
        *ids.entry(k).or_insert_with(|| {
            terms.push(t);
            queue.push_back(terms.len());
            terms.len()
        })
    };

    let initial = intern(key(l), &mut terms, &mut queue);
    let mut finals = BTreeSet::new();
    let mut transitions = Vec::new();
    while let Some(id) = queue.pop_front() {
        let term = terms[id - 1].clone();
        match &term {
            LocalType::Send { from, to, branches } | LocalType::Recv { from, to, branches } => {
                let (direction, self_role, peer) = match term {
                    LocalType::Send { .. } => (Direction::Send, from, to),
                    _ => (Direction::Recv, to, from),
                };
                for (sort, cont) in branches {
                    let target = intern(key(cont), &mut terms, &mut queue);
                    transitions.push(Transition {
                        from: id,
                        action: Action {
                            direction,
                            peer: peer.clone(),
                            self_role: self_role.clone(),
                            sort: sort.clone(),
                        },
                        to: target,
                    });
                }
            }
            LocalType::End => {
                finals.insert(id);
            }
            // only reachable from non-contractive input: a stuck state
            LocalType::Loop { .. } | LocalType::Recur { .. } => {}
        }
    }
    Fsm { states: (1..=terms.len()).collect(), initial, finals, transitions }
}

impl Fsm {
    pub fn outgoing(&self, state: StateId) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.from == state)
    }

    /// Renumbers states by a breadth-first walk from the initial state that
    /// visits outgoing edges in label order. Two deterministic automata are
    /// isomorphic iff their canonical forms are equal.
    pub fn canonical(&self) -> Fsm {
        let mut renumber: HashMap<StateId, StateId> = HashMap::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.initial]);
        renumber.insert(self.initial, 1);
        while let Some(s) = queue.pop_front() {
            order.push(s);
            let mut out: Vec<&Transition> = self.outgoing(s).collect();
            out.sort_by_key(|t| t.action.label());
            for t in out {
                if !renumber.contains_key(&t.to) {
                    renumber.insert(t.to, renumber.len() + 1);
                    queue.push_back(t.to);
                }
            }
        }
        let mut transitions: Vec<Transition> = self
            .transitions
            .iter()
            .filter(|t| renumber.contains_key(&t.from))
            .map(|t| Transition { from: renumber[&t.from], action: t.action.clone(), to: renumber[&t.to] })
            .collect();
        transitions.sort_by_key(|t| (t.from, t.action.label(), t.to));
        Fsm {
            states: (1..=order.len()).collect(),
            initial: 1,
            finals: self.finals.iter().filter_map(|f| renumber.get(f).copied()).collect(),
            transitions,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("automata serialize")
    }

    /// GraphViz rendering; final states are double circles.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph fsm {\n  rankdir=LR;\n  start [shape=point];\n");
        let _ = writeln!(out, "  start -> {};", self.initial);
        for s in &self.states {
            let shape = if self.finals.contains(s) { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  {s} [shape={shape}];");
        }
        for t in &self.transitions {
            let _ = writeln!(out, "  {} -> {} [label=\"{}\"];", t.from, t.to, t.action.label());
        }
        out.push_str("}\n");
        out
    }
}
