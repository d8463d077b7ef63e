use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use crate::ast::{branch_lookup_name, head_fragment, unfold, LocalType, Role, Sort};

use super::{GlobalSession, Message, RuntimeError, Value};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug)]
struct Cell {
    id: u64,
    consumed: AtomicBool,
    role: Role,
    session: GlobalSession,
    ty: LocalType,
}

/// A use-once handle on one role of a session. Every operation consumes
/// the handle and returns its successor; using a consumed handle is a
/// linearity fault. Clones share the consumed flag.
#[derive(Clone, Debug)]
pub struct Endpoint(Arc<Cell>);

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "endpoint #{} of {} in {} at {}", self.0.id, self.0.role, self.0.session.name(), self.0.ty)
    }
}

impl Endpoint {
    pub(crate) fn new(role: Role, session: GlobalSession, ty: LocalType) -> Self {
        Endpoint(Arc::new(Cell {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            consumed: AtomicBool::new(false),
            role,
            session,
            ty,
        }))
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn role(&self) -> &Role {
        &self.0.role
    }

    pub fn session(&self) -> &GlobalSession {
        &self.0.session
    }

    /// The local type this handle is at.
    pub fn current_type(&self) -> LocalType {
        self.0.ty.clone()
    }

    pub fn is_consumed(&self) -> bool {
        self.0.consumed.load(Ordering::SeqCst)
    }

    /// Whether the remaining protocol is empty.
    pub fn is_end(&self) -> bool {
        unfold(&self.0.ty) == LocalType::End
    }

    fn successor(&self, ty: LocalType) -> Endpoint {
        Endpoint::new(self.0.role.clone(), self.0.session.clone(), ty)
    }

    fn fault(&self, e: RuntimeError) -> RuntimeError {
        self.0.session.abort();
        e
    }

    fn consume(&self, action: &str) -> Result<(), RuntimeError> {
        if self.0.consumed.swap(true, Ordering::SeqCst) {
            return Err(self.fault(RuntimeError::Linearity {
                role: self.0.role.clone(),
                endpoint: self.0.id,
                action: action.to_string(),
            }));
        }
        Ok(())
    }

    fn violation(&self, found: String) -> RuntimeError {
        self.fault(RuntimeError::Violation {
            role: self.0.role.clone(),
            expected: head_fragment(&unfold(&self.0.ty)),
            found,
        })
    }

    fn mismatch(&self, found: String) -> RuntimeError {
        self.fault(RuntimeError::SortMismatch {
            role: self.0.role.clone(),
            expected: head_fragment(&unfold(&self.0.ty)),
            found,
        })
    }

    /// Picks the sort a value is sent as: a message keeps its sort, a bare
    /// value selects the unique offered sort whose schema it fits.
    fn select(&self, branches: &[(Sort, LocalType)], value: Value) -> Result<(Sort, Value), String> {
        if let Value::Msg(m) = value {
            let (sort, _) = branch_lookup_name(branches, &m.sort.name).ok_or_else(|| m.sort.name.clone())?;
            return if m.payload.fits(&sort.payload) {
                Ok((sort.clone(), m.payload))
            } else {
                Err(format!("{}({})", m.sort.name, m.payload.kind()))
            };
        }
        let hits: Vec<&Sort> = branches.iter().map(|(s, _)| s).filter(|s| value.fits(&s.payload)).collect();
        match hits.as_slice() {
            [s] => Ok(((*s).clone(), value)),
            _ => Err(format!("{} value {value}", value.kind())),
        }
    }

    /// Sends `value` to `to`. A [`Value::Msg`] selects its own sort. An
    /// endpoint payload is delegated: the sent handle is consumed and the
    /// receiver gets a fresh one at the same state.
    pub fn send(&self, to: &Role, value: Value) -> Result<Endpoint, RuntimeError> {
        self.consume(&format!("send to {to}"))?;
        let ty = unfold(&self.0.ty);
        let LocalType::Send { to: peer, branches, .. } = &ty else {
            return Err(self.violation(format!("{} -> {to} ! ...", self.0.role)));
        };
        if peer != to {
            return Err(self.violation(format!("{} -> {to} ! ...", self.0.role)));
        }
        let (sort, payload) = self.select(branches, value).map_err(|found| self.mismatch(found))?;
        let payload = match payload {
            Value::Endpoint(e) => Value::Endpoint(e.transfer().map_err(|err| self.fault(err))?),
            v => v,
        };
        let next = branches.iter().find(|(s, _)| s.name == sort.name).map(|(_, t)| t.clone()).expect("selected");
        self.0.session.post(&self.0.role, to, Message { sort, payload, seq: 0 }, self.0.id)?;
        Ok(self.successor(next))
    }

    /// Blocks for the next message from `from`.
    pub fn recv(&self, from: &Role) -> Result<(Message, Endpoint), RuntimeError> {
        self.consume(&format!("recv from {from}"))?;
        let ty = unfold(&self.0.ty);
        let LocalType::Recv { from: peer, branches, .. } = &ty else {
            return Err(self.violation(format!("{from} -> {} ? ...", self.0.role)));
        };
        if peer != from {
            return Err(self.violation(format!("{from} -> {} ? ...", self.0.role)));
        }
        let msg = self.0.session.take(from, &self.0.role, self.0.id)?;
        let Some((sort, next)) = branch_lookup_name(branches, &msg.sort.name) else {
            return Err(self.mismatch(msg.to_string()));
        };
        if !msg.payload.fits(&sort.payload) {
            return Err(self.mismatch(msg.to_string()));
        }
        Ok((msg, self.successor(next.clone())))
    }

    /// Enters a loop. The type is unchanged; recursion unfolds lazily.
    pub fn enter_loop(&self) -> Result<Endpoint, RuntimeError> {
        self.consume("loop")?;
        Ok(self.successor(self.0.ty.clone()))
    }

    /// Jumps back to the start of the enclosing loop.
    pub fn recur(&self) -> Result<Endpoint, RuntimeError> {
        self.consume("recur")?;
        Ok(self.successor(self.0.ty.clone()))
    }

    /// Hands the session over to another owner.
    fn transfer(&self) -> Result<Endpoint, RuntimeError> {
        self.consume("delegate")?;
        Ok(self.successor(self.0.ty.clone()))
    }
}
