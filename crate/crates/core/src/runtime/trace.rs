use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::Serialize;

use crate::ast::Role;

use super::PayloadRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Send,
    Recv,
}

/// One action of a run. A receive carries the `seq` of the message it
/// consumed, so sends and receives of the same message share a number.
#[derive(Clone, Debug, Serialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub session: String,
    pub from: Role,
    pub to: Role,
    pub sort: String,
    pub payload: PayloadRecord,
    /// Identity of the endpoint handle that performed the action.
    pub endpoint: u64,
    #[serde(skip)]
    pub at: Instant,
}

impl TraceEvent {
    /// The role performing the action.
    pub fn subject(&self) -> &Role {
        match self.kind {
            EventKind::Send => &self.from,
            EventKind::Recv => &self.to,
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seq {}: {} -> {} : {}({})", self.seq, self.from, self.to, self.sort, self.payload)
    }
}

#[derive(Debug)]
struct LogInner {
    events: Vec<TraceEvent>,
    next_seq: u64,
}

/// Shared, append-only log of a run. Several sessions may log into one.
#[derive(Clone, Debug)]
pub struct TraceLog(Arc<Mutex<LogInner>>);

impl Default for TraceLog {
    fn default() -> Self {
        TraceLog(Arc::new(Mutex::new(LogInner { events: Vec::new(), next_seq: 1 })))
    }
}

impl TraceLog {
    pub fn new() -> Self {
        TraceLog::default()
    }

    /// Assigns the next sequence number and records the send. `deliver`
    /// runs under the log lock, so queue order and sequence order agree.
    pub(crate) fn record_send<T>(&self, mut ev: TraceEvent, deliver: impl FnOnce(u64) -> T) -> T {
        let mut inner = self.0.lock().unwrap_or_else(|e| e.into_inner());
        ev.seq = inner.next_seq;
        inner.next_seq += 1;
        let out = deliver(ev.seq);
        inner.events.push(ev);
        out
    }

    pub(crate) fn record(&self, ev: TraceEvent) {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).events.push(ev);
    }

    pub fn snapshot(&self) -> Trace {
        Trace { events: self.0.lock().unwrap_or_else(|e| e.into_inner()).events.clone() }
    }
}

/// A finished trace.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    /// Sends, in sequence order.
    pub fn communications(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::Send)
    }

    /// Events of one session.
    pub fn session<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a TraceEvent> + 'a {
        self.events.iter().filter(move |e| e.session == name)
    }

    /// One line per communication: `seq <n>: <p> -> <q> : <sort>(<payload>)`.
    pub fn render_text(&self) -> String {
        self.communications().map(|e| format!("{e}\n")).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": "mpstkit.trace/1",
            "events": serde_json::to_value(&self.events).expect("trace serializes"),
        })
    }
}
