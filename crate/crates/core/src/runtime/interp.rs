use std::collections::BTreeMap;

use crate::ast::{Payload, Sort};
use crate::typecheck::{Expr, ProcessTerm, SortTable, Term};

use super::{Endpoint, Message, RuntimeError, Value};

/// Variable bindings of a running process: data values and endpoints.
pub type Bindings = BTreeMap<String, Value>;

enum Flow {
    Done(Bindings),
    Recur { label: String, env: Bindings },
}

struct Frame<'a> {
    label: &'a str,
    session: &'a str,
    body: &'a ProcessTerm,
}

struct Interp<'a> {
    sorts: &'a SortTable,
    loops: Vec<Frame<'a>>,
}

/// Runs `p` to completion with the given bindings, which hold the initial
/// endpoints under their session names. Returns the final bindings.
pub fn run(bindings: Bindings, p: &ProcessTerm, sorts: &SortTable) -> Result<Bindings, RuntimeError> {
    let mut it = Interp { sorts, loops: Vec::new() };
    match it.exec(bindings, p)? {
        Flow::Done(env) => Ok(env),
        Flow::Recur { label, .. } => Err(RuntimeError::Eval(format!("recur {label} outside its loop"))),
    }
}

fn endpoint(env: &Bindings, name: &str) -> Result<Endpoint, RuntimeError> {
    match env.get(name) {
        Some(Value::Endpoint(e)) => Ok(e.clone()),
        Some(v) => Err(RuntimeError::Eval(format!("`{name}` is a {}, not a session", v.kind()))),
        None => Err(RuntimeError::Eval(format!("unbound session `{name}`"))),
    }
}

impl<'a> Interp<'a> {
    fn exec(&mut self, mut env: Bindings, mut p: &'a ProcessTerm) -> Result<Flow, RuntimeError> {
        loop {
            match &p.term {
                Term::End => {
                    for (name, v) in &env {
                        if let Value::Endpoint(e) = v {
                            if !e.is_consumed() && !e.is_end() {
                                e.session().abort();
                                return Err(RuntimeError::Unfinished {
                                    role: e.role().clone(),
                                    name: name.clone(),
                                    remaining: e.current_type().to_string(),
                                });
                            }
                        }
                    }
                    return Ok(Flow::Done(env));
                }
                Term::Send { session, to, payload, cont } => {
                    let ep = endpoint(&env, session)?;
                    let v = self.eval(&env, payload)?;
                    let next = ep.send(to, v)?;
                    env.insert(session.clone(), Value::Endpoint(next));
                    p = cont;
                }
                Term::Recv { session, from, arms } => {
                    let ep = endpoint(&env, session)?;
                    let (msg, next) = ep.recv(from)?;
                    let Some(arm) = arms.iter().find(|a| a.sort == msg.sort.name) else {
                        ep.session().abort();
                        return Err(RuntimeError::SortMismatch {
                            role: ep.role().clone(),
                            expected: arms.iter().map(|a| a.sort.as_str()).collect::<Vec<_>>().join(" | "),
                            found: msg.to_string(),
                        });
                    };
                    env.insert(session.clone(), Value::Endpoint(next));
                    if let Some(var) = &arm.var {
                        let v = match msg.payload {
                            Value::Endpoint(e) => Value::Endpoint(e),
                            _ => Value::Msg(Box::new(msg)),
                        };
                        env.insert(var.clone(), v);
                    }
                    p = &arm.body;
                }
                Term::Loop { session, label, body } => {
                    let next = endpoint(&env, session)?.enter_loop()?;
                    env.insert(session.clone(), Value::Endpoint(next));
                    self.loops.push(Frame { label, session, body });
                    let out = self.iterate(env);
                    self.loops.pop();
                    return out;
                }
                Term::Recur { label, session, cont } => {
                    let Some(frame) = self.loops.iter().rev().find(|f| f.label == label) else {
                        return Err(RuntimeError::Eval(format!("recur {label} outside its loop")));
                    };
                    let loop_var = frame.session;
                    let next = endpoint(&env, session.as_deref().unwrap_or(loop_var))?.recur()?;
                    let mut again = env.clone();
                    again.insert(loop_var.to_string(), Value::Endpoint(next));
                    let Some(cont) = cont else {
                        return Ok(Flow::Recur { label: label.clone(), env: again });
                    };
                    // a non-tail recur runs one more pass of the loop, then carries on here
                    let depth = self.loops.iter().rposition(|f| f.label == label).expect("found above");
                    let rest = self.loops.split_off(depth + 1);
                    let out = self.iterate(again);
                    self.loops.extend(rest);
                    match out? {
                        Flow::Done(_) => p = cont,
                        other => return Ok(other),
                    }
                }
                Term::If { cond, then, els } => match self.eval(&env, cond)? {
                    Value::Bool(true) => p = then,
                    Value::Bool(false) => p = els,
                    v => return Err(RuntimeError::Eval(format!("condition `{cond}` is a {}", v.kind()))),
                },
                Term::Let { name, value, cont } => {
                    let v = self.eval(&env, value)?;
                    env.insert(name.clone(), v);
                    p = cont;
                }
            }
        }
    }

    /// Runs the innermost loop frame until it finishes.
    fn iterate(&mut self, mut env: Bindings) -> Result<Flow, RuntimeError> {
        let (label, body) = {
            let f = self.loops.last().expect("inside a loop");
            (f.label, f.body)
        };
        loop {
            match self.exec(env, body)? {
                Flow::Recur { label: l, env: e } if l == label => env = e,
                other => return Ok(other),
            }
        }
    }

    fn eval(&self, env: &Bindings, e: &Expr) -> Result<Value, RuntimeError> {
        let int = |x: &Expr| -> Result<i64, RuntimeError> {
            let v = self.eval(env, x)?;
            v.as_int().ok_or_else(|| RuntimeError::Eval(format!("`{x}` is a {}, not an int", v.kind())))
        };
        Ok(match e {
            Expr::Int(n) => Value::Int(*n),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Var(v) | Expr::SessionRef(v) => {
                env.get(v).cloned().ok_or_else(|| RuntimeError::Eval(format!("unbound variable `{v}`")))?
            }
            Expr::NewSort { sort, args } => {
                let sort = self.sorts.get(sort).cloned().unwrap_or_else(|| Sort::unit(sort.as_str()));
                let payload = match args.as_slice() {
                    [] => Value::Unit,
                    [a] => match self.eval(env, a)? {
                        Value::Msg(m) if !matches!(sort.payload, Payload::None) => m.payload,
                        v => v,
                    },
                    _ => return Err(RuntimeError::Eval(format!("{sort} takes at most one argument"))),
                };
                if !matches!(sort.payload, Payload::Endpoint { .. }) && !payload.fits(&sort.payload) {
                    return Err(RuntimeError::Eval(format!("{} does not fit sort {sort}", payload.kind())));
                }
                Value::Msg(Box::new(Message { sort, payload, seq: 0 }))
            }
            Expr::Sub(a, b) => Value::Int(int(a)?.wrapping_sub(int(b)?)),
            Expr::Lt(a, b) => Value::Bool(int(a)? < int(b)?),
            Expr::Field { base, field } => match self.eval(env, base)? {
                Value::Msg(m) => m.payload,
                v => return Err(RuntimeError::Eval(format!("no field `{field}` on a {}", v.kind()))),
            },
        })
    }
}
