//! Process terms written mechanically from local types.

use mpstkit::ast::{unfold, LocalType, Payload, Sort};
use mpstkit::typecheck::{Expr, Pos, ProcessTerm, RecvArm, Term};

/// Picks a send branch given the number of offered branches.
pub type Chooser<'a> = &'a mut dyn FnMut(usize) -> usize;

/// A chooser cycling through `picks` (or always 0 when empty).
pub fn cycle(picks: Vec<u8>) -> impl FnMut(usize) -> usize {
    let mut i = 0;
    move |n| {
        let k = picks.get(i % picks.len().max(1)).copied().unwrap_or(0) as usize;
        i += 1;
        k % n
    }
}

/// A payload expression of the sort's schema.
pub fn payload(sort: &Sort, n: i64) -> Expr {
    let args = match &sort.payload {
        Payload::None => vec![],
        Payload::Int => vec![Expr::Int(n)],
        Payload::String => vec![Expr::Str(format!("m{n}"))],
        Payload::Endpoint { .. } => panic!("cannot synthesize endpoint payloads"),
    };
    Expr::NewSort { sort: sort.name.clone(), args }
}

/// Numbers the terms it creates line by line, so diagnostics have distinct
/// positions.
#[derive(Default)]
pub struct Synth {
    line: u32,
}

impl Synth {
    fn at(&mut self, term: Term) -> ProcessTerm {
        self.line += 1;
        ProcessTerm::new(Pos::new(self.line, 1), term)
    }

    fn arm_var(sort: &Sort) -> Option<String> {
        (!matches!(sort.payload, Payload::None)).then(|| "v".to_string())
    }

    /// A process following `l` on session `s`, with a `loop` per recursion
    /// and the send branches `choose` selects.
    pub fn implement(&mut self, l: &LocalType, s: &str, choose: Chooser) -> ProcessTerm {
        match l {
            LocalType::Send { to, branches, .. } => {
                let i = choose(branches.len());
                let (sort, cont) = &branches[i];
                let line = self.line as i64;
                let cont = self.implement(cont, s, choose);
                self.at(Term::Send {
                    session: s.into(),
                    to: to.clone(),
                    payload: payload(sort, line),
                    cont: Box::new(cont),
                })
            }
            LocalType::Recv { from, branches, .. } => {
                let arms = branches
                    .iter()
                    .map(|(sort, cont)| {
                        let body = self.implement(cont, s, choose);
                        RecvArm { pos: body.pos, sort: sort.name.clone(), var: Self::arm_var(sort), body }
                    })
                    .collect();
                self.at(Term::Recv { session: s.into(), from: from.clone(), arms })
            }
            LocalType::End => self.at(Term::End),
            LocalType::Loop { var, body } => {
                let body = self.implement(body, s, choose);
                self.at(Term::Loop { session: s.into(), label: var.name().into(), body: Box::new(body) })
            }
            LocalType::Recur { var } => self.at(Term::Recur { label: var.name().into(), session: None, cont: None }),
        }
    }

    /// A loop-free process following `l` for at most `budget` actions on
    /// every path, then stopping with `end` wherever it is.
    pub fn unrolled(&mut self, l: &LocalType, s: &str, budget: usize, choose: Chooser) -> ProcessTerm {
        if budget == 0 {
            return self.at(Term::End);
        }
        match unfold(l) {
            LocalType::Send { to, branches, .. } => {
                let i = choose(branches.len());
                let (sort, cont) = &branches[i];
                let line = self.line as i64;
                let cont = self.unrolled(cont, s, budget - 1, choose);
                self.at(Term::Send { session: s.into(), to, payload: payload(sort, line), cont: Box::new(cont) })
            }
            LocalType::Recv { from, branches, .. } => {
                let arms = branches
                    .iter()
                    .map(|(sort, cont)| {
                        let body = self.unrolled(cont, s, budget - 1, choose);
                        RecvArm { pos: body.pos, sort: sort.name.clone(), var: Self::arm_var(sort), body }
                    })
                    .collect();
                self.at(Term::Recv { session: s.into(), from, arms })
            }
            _ => self.at(Term::End),
        }
    }
}

/// Ways to break a process so that it no longer follows its type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Breakage {
    /// Replace the sort of a send with one outside its type.
    UnknownSort,
    /// Drop the first arm of a receive with more than one arm.
    DropArm,
    /// Turn a send into a receive of the same sort.
    FlipAction,
}

/// Applies `b` to the `at`-th eligible term in preorder (modulo their number).
pub fn break_process(p: &ProcessTerm, b: Breakage, at: usize) -> Option<ProcessTerm> {
    fn eligible(p: &ProcessTerm, b: Breakage) -> bool {
        match (&p.term, b) {
            (Term::Send { .. }, Breakage::UnknownSort | Breakage::FlipAction) => true,
            (Term::Recv { arms, .. }, Breakage::DropArm) => arms.len() > 1,
            _ => false,
        }
    }
    fn children(p: &ProcessTerm) -> Vec<&ProcessTerm> {
        match &p.term {
            Term::Send { cont, .. } | Term::Let { cont, .. } => vec![cont],
            Term::Recv { arms, .. } => arms.iter().map(|a| &a.body).collect(),
            Term::Loop { body, .. } => vec![body],
            Term::Recur { cont, .. } => cont.iter().map(|c| c.as_ref()).collect(),
            Term::If { then, els, .. } => vec![then, els],
            Term::End => vec![],
        }
    }
    fn count(p: &ProcessTerm, b: Breakage) -> usize {
        eligible(p, b) as usize + children(p).into_iter().map(|c| count(c, b)).sum::<usize>()
    }
    fn go(p: &ProcessTerm, b: Breakage, at: &mut Option<usize>) -> ProcessTerm {
        if eligible(p, b) {
            if *at == Some(0) {
                *at = None;
                let term = match (&p.term, b) {
                    (Term::Send { session, to, cont, .. }, Breakage::UnknownSort) => Term::Send {
                        session: session.clone(),
                        to: to.clone(),
                        payload: Expr::NewSort { sort: "Bogus".into(), args: vec![] },
                        cont: cont.clone(),
                    },
                    (Term::Send { session, to, payload, cont }, Breakage::FlipAction) => {
                        let sort = match payload {
                            Expr::NewSort { sort, .. } => sort.clone(),
                            _ => "Ok".into(),
                        };
                        Term::Recv {
                            session: session.clone(),
                            from: to.clone(),
                            arms: vec![RecvArm { pos: cont.pos, sort, var: None, body: (**cont).clone() }],
                        }
                    }
                    (Term::Recv { session, from, arms }, Breakage::DropArm) => {
                        Term::Recv { session: session.clone(), from: from.clone(), arms: arms[1..].to_vec() }
                    }
                    _ => unreachable!(),
                };
                return ProcessTerm::new(p.pos, term);
            }
            *at = at.map(|n| n - 1);
        }
        let term = match &p.term {
            Term::Send { session, to, payload, cont } => Term::Send {
                session: session.clone(),
                to: to.clone(),
                payload: payload.clone(),
                cont: Box::new(go(cont, b, at)),
            },
            Term::Recv { session, from, arms } => Term::Recv {
                session: session.clone(),
                from: from.clone(),
                arms: arms.iter().map(|a| RecvArm { body: go(&a.body, b, at), ..a.clone() }).collect(),
            },
            Term::Loop { session, label, body } => {
                Term::Loop { session: session.clone(), label: label.clone(), body: Box::new(go(body, b, at)) }
            }
            Term::Recur { label, session, cont } => Term::Recur {
                label: label.clone(),
                session: session.clone(),
                cont: cont.as_ref().map(|c| Box::new(go(c, b, at))),
            },
            Term::If { cond, then, els } => {
                Term::If { cond: cond.clone(), then: Box::new(go(then, b, at)), els: Box::new(go(els, b, at)) }
            }
            Term::Let { name, value, cont } => {
                Term::Let { name: name.clone(), value: value.clone(), cont: Box::new(go(cont, b, at)) }
            }
            Term::End => Term::End,
        };
        ProcessTerm::new(p.pos, term)
    }
    let n = count(p, b);
    if n == 0 {
        return None;
    }
    Some(go(p, b, &mut Some(at % n)))
}
