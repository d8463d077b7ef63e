//! Running hand-made processes on a session, and trace-level checks.

use std::collections::{BTreeMap, HashSet};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use mpstkit::ast::{GlobalType, Role};
use mpstkit::runtime::{run, Bindings, EventKind, GlobalSession, RuntimeError, Trace, Value};
use mpstkit::typecheck::{ProcessTerm, SortTable};

pub struct Outcome {
    pub session: GlobalSession,
    pub results: BTreeMap<Role, Result<(), RuntimeError>>,
    pub trace: Trace,
    pub timed_out: bool,
}

impl Outcome {
    pub fn all_ok(&self) -> bool {
        !self.timed_out && self.results.values().all(Result::is_ok)
    }
}

/// Runs one process per role, each on its own thread, with its endpoint
/// bound to `s`. A failing process aborts the session; so does the timeout.
pub fn execute(g: &GlobalType, procs: Vec<(Role, ProcessTerm)>, sorts: &SortTable, timeout: Duration) -> Outcome {
    let session = GlobalSession::new(g.clone()).expect("runnable protocol");
    let (tx, rx) = mpsc::channel();
    let n = procs.len();
    for (role, term) in procs {
        let (tx, session, sorts) = (tx.clone(), session.clone(), sorts.clone());
        thread::spawn(move || {
            let result = session.init(&role).and_then(|ep| {
                let env = Bindings::from([("s".to_string(), Value::Endpoint(ep))]);
                run(env, &term, &sorts).map(|_| ())
            });
            if result.is_err() {
                session.abort();
            }
            let _ = tx.send((role, result));
        });
    }
    let deadline = Instant::now() + timeout;
    let mut results = BTreeMap::new();
    let mut timed_out = false;
    while results.len() < n {
        let left = deadline.saturating_duration_since(Instant::now());
        match rx.recv_timeout(if timed_out { Duration::from_secs(5) } else { left }) {
            Ok((role, r)) => {
                results.insert(role, r);
            }
            Err(_) if !timed_out => {
                timed_out = true;
                session.abort();
            }
            Err(_) => panic!("processes did not stop after abort"),
        }
    }
    let trace = session.log().snapshot();
    Outcome { session, results, trace, timed_out }
}

/// Receives of each ordered pair consume that pair's messages in send order.
pub fn check_fifo(t: &Trace) -> Result<(), String> {
    let mut sent: BTreeMap<(&Role, &Role, &str), Vec<u64>> = BTreeMap::new();
    let mut received: BTreeMap<(&Role, &Role, &str), Vec<u64>> = BTreeMap::new();
    let mut sends: Vec<_> = t.events.iter().filter(|e| e.kind == EventKind::Send).collect();
    sends.sort_by_key(|e| e.seq);
    for e in sends {
        sent.entry((&e.from, &e.to, e.session.as_str())).or_default().push(e.seq);
    }
    for e in t.events.iter().filter(|e| e.kind == EventKind::Recv) {
        received.entry((&e.from, &e.to, e.session.as_str())).or_default().push(e.seq);
    }
    for (k, got) in &received {
        let want = sent.get(k).map(Vec::as_slice).unwrap_or(&[]);
        if !want.starts_with(got) {
            return Err(format!("{} -> {}: received {got:?}, sent {want:?}", k.0, k.1));
        }
    }
    Ok(())
}

/// No endpoint handle performs two actions.
pub fn check_use_once(t: &Trace) -> Result<(), String> {
    let mut seen = HashSet::new();
    for e in &t.events {
        if !seen.insert(e.endpoint) {
            return Err(format!("endpoint #{} used twice (at {e})", e.endpoint));
        }
    }
    Ok(())
}

/// No action happens before every role has initialised.
pub fn check_barrier(t: &Trace, session: &GlobalSession) -> Result<(), String> {
    let Some(released) = session.released_at() else {
        return if t.events.is_empty() { Ok(()) } else { Err("actions without a completed init".into()) };
    };
    match t.events.iter().find(|e| e.at < released) {
        Some(e) => Err(format!("{e} happened before the last init")),
        None => Ok(()),
    }
}
