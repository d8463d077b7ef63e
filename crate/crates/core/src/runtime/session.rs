use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use crossbeam_channel::{select, unbounded, Receiver, Sender};

use crate::ast::{well_formed, GlobalType, LocalType, Role};
use crate::projection::project;

use super::{Endpoint, EventKind, Message, PayloadRecord, RuntimeError, TraceEvent, TraceLog};

/// Unbounded FIFO queues, one per ordered pair of roles.
#[derive(Debug)]
pub struct Network {
    queues: HashMap<(Role, Role), (Sender<Message>, Receiver<Message>)>,
}

impl Network {
    pub fn new(roles: &[Role]) -> Self {
        let mut queues = HashMap::new();
        for p in roles {
            for q in roles.iter().filter(|q| *q != p) {
                queues.insert((p.clone(), q.clone()), unbounded());
            }
        }
        Network { queues }
    }

    fn queue(&self, from: &Role, to: &Role) -> Option<&(Sender<Message>, Receiver<Message>)> {
        self.queues.get(&(from.clone(), to.clone()))
    }

    /// Messages waiting from `from` to `to`.
    pub fn pending(&self, from: &Role, to: &Role) -> usize {
        self.queue(from, to).map_or(0, |(_, rx)| rx.len())
    }
}

#[derive(Debug, Default)]
struct InitState {
    arrived: BTreeSet<Role>,
    released_at: Option<Instant>,
}

#[derive(Debug)]
struct Inner {
    name: String,
    protocol: GlobalType,
    roles: Vec<Role>,
    locals: BTreeMap<Role, LocalType>,
    init: Mutex<InitState>,
    ready: Condvar,
    network: Network,
    aborted: AtomicBool,
    abort_tx: Mutex<Option<Sender<()>>>,
    abort_rx: Receiver<()>,
    log: TraceLog,
}

/// A running instance of a protocol. Cheap to clone; clones share state.
#[derive(Clone, Debug)]
pub struct GlobalSession(Arc<Inner>);

impl GlobalSession {
    /// Checks well-formedness and projects onto every role.
    pub fn new(g: GlobalType) -> Result<Self, RuntimeError> {
        GlobalSession::with_log("session", g, TraceLog::new())
    }

    /// A named session writing into a shared log.
    pub fn with_log(name: impl Into<String>, g: GlobalType, log: TraceLog) -> Result<Self, RuntimeError> {
        well_formed(&g).map_err(RuntimeError::IllFormed)?;
        let roles = g.roles();
        let mut locals = BTreeMap::new();
        for r in &roles {
            let l = project(&g, r).map_err(|e| RuntimeError::Unprojectable(e.to_string()))?;
            locals.insert(r.clone(), l);
        }
        let (abort_tx, abort_rx) = unbounded();
        Ok(GlobalSession(Arc::new(Inner {
            name: name.into(),
            network: Network::new(&roles),
            protocol: g,
            roles,
            locals,
            init: Mutex::new(InitState::default()),
            ready: Condvar::new(),
            aborted: AtomicBool::new(false),
            abort_tx: Mutex::new(Some(abort_tx)),
            abort_rx,
            log,
        })))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn protocol(&self) -> &GlobalType {
        &self.0.protocol
    }

    pub fn roles(&self) -> &[Role] {
        &self.0.roles
    }

    pub fn network(&self) -> &Network {
        &self.0.network
    }

    pub fn log(&self) -> &TraceLog {
        &self.0.log
    }

    /// Roles that have called [`init`](Self::init) so far.
    pub fn arrived(&self) -> BTreeSet<Role> {
        self.0.init.lock().unwrap_or_else(|e| e.into_inner()).arrived.clone()
    }

    /// When the last role arrived.
    pub fn released_at(&self) -> Option<Instant> {
        self.0.init.lock().unwrap_or_else(|e| e.into_inner()).released_at
    }

    /// Blocks until every role has called `init`, then returns the endpoint
    /// for `role`. Each role must call this from its own thread.
    pub fn init(&self, role: &Role) -> Result<Endpoint, RuntimeError> {
        let local = self.0.locals.get(role).ok_or_else(|| RuntimeError::UnknownRole { role: role.clone() })?.clone();
        let mut st = self.0.init.lock().unwrap_or_else(|e| e.into_inner());
        if !st.arrived.insert(role.clone()) {
            return Err(RuntimeError::DoubleInit { role: role.clone() });
        }
        if st.arrived.len() == self.0.roles.len() {
            st.released_at = Some(Instant::now());
            self.0.ready.notify_all();
        }
        while st.released_at.is_none() {
            if self.is_aborted() {
                return Err(self.aborted_error());
            }
            st = self.0.ready.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        Ok(Endpoint::new(role.clone(), self.clone(), local))
    }

    /// Wakes every blocked `init` and `recv` with an error. Idempotent.
    pub fn abort(&self) {
        self.0.aborted.store(true, Ordering::SeqCst);
        self.0.abort_tx.lock().unwrap_or_else(|e| e.into_inner()).take();
        let _guard = self.0.init.lock().unwrap_or_else(|e| e.into_inner());
        self.0.ready.notify_all();
    }

    pub fn is_aborted(&self) -> bool {
        self.0.aborted.load(Ordering::SeqCst)
    }

    fn aborted_error(&self) -> RuntimeError {
        RuntimeError::Aborted { session: self.0.name.clone() }
    }

    pub(crate) fn post(&self, from: &Role, to: &Role, mut msg: Message, endpoint: u64) -> Result<u64, RuntimeError> {
        if self.is_aborted() {
            return Err(self.aborted_error());
        }
        let (tx, _) = self.0.network.queue(from, to).ok_or_else(|| RuntimeError::UnknownRole { role: to.clone() })?;
        let ev = TraceEvent {
            seq: 0,
            kind: EventKind::Send,
            session: self.0.name.clone(),
            from: from.clone(),
            to: to.clone(),
            sort: msg.sort.name.clone(),
            payload: PayloadRecord::from(&msg.payload),
            endpoint,
            at: Instant::now(),
        };
        Ok(self.0.log.record_send(ev, |seq| {
            msg.seq = seq;
            tx.send(msg).expect("queue receiver lives in the session");
            seq
        }))
    }

    pub(crate) fn take(&self, from: &Role, to: &Role, endpoint: u64) -> Result<Message, RuntimeError> {
        let (_, rx) = self.0.network.queue(from, to).ok_or_else(|| RuntimeError::UnknownRole { role: from.clone() })?;
        let msg = select! {
            recv(rx) -> m => m.expect("queue sender lives in the session"),
            recv(self.0.abort_rx) -> _ => return Err(self.aborted_error()),
        };
        self.0.log.record(TraceEvent {
            seq: msg.seq,
            kind: EventKind::Recv,
            session: self.0.name.clone(),
            from: from.clone(),
            to: to.clone(),
            sort: msg.sort.name.clone(),
            payload: PayloadRecord::from(&msg.payload),
            endpoint,
            at: Instant::now(),
        });
        Ok(msg)
    }
}
