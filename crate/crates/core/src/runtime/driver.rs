use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::Duration;

use thiserror::Error;

use crate::ast::{alpha_normalize, GlobalType, Role};
use crate::surface::{render_type, ProtocolFile};
use crate::typecheck::{proc_sessions, sort_table, Diagnostic};

use super::{run, Bindings, GlobalSession, RuntimeError, Trace, TraceLog, Value};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Abort every session if the run has not finished by then.
    pub deadline: Option<Duration>,
}

#[derive(Debug)]
pub struct ProcOutcome {
    pub name: String,
    pub result: Result<(), RuntimeError>,
}

#[derive(Debug)]
pub struct RunReport {
    pub sessions: Vec<GlobalSession>,
    pub procs: Vec<ProcOutcome>,
    pub trace: Trace,
    pub timed_out: bool,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        !self.timed_out && self.procs.iter().all(|p| p.result.is_ok())
    }

    /// Faults that did not merely result from another process aborting.
    pub fn root_faults(&self) -> impl Iterator<Item = (&str, &RuntimeError)> {
        self.procs.iter().filter_map(|p| match &p.result {
            Err(RuntimeError::Aborted { .. }) | Ok(()) => None,
            Err(e) => Some((p.name.as_str(), e)),
        })
    }
}

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("{0}")]
    Session(Diagnostic),
    #[error("role {role} of {protocol} is not played by any process")]
    Unplayed { protocol: String, role: Role },
    #[error("role {role} of {protocol} is played by both {first} and {second}")]
    Duplicate { protocol: String, role: Role, first: String, second: String },
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

struct Instance {
    key: GlobalType,
    name: String,
    global: GlobalType,
    players: BTreeMap<Role, String>,
}

/// Runs every process of the file, one thread each. Processes taking part
/// in the same protocol share one session.
pub fn run_file(file: &ProtocolFile, opts: &RunOptions) -> Result<RunReport, SetupError> {
    let (sorts, _) = sort_table(file);
    let mut instances: Vec<Instance> = Vec::new();
    let mut plans = Vec::new();
    for p in &file.procs {
        let bindings = proc_sessions(file, p).map_err(SetupError::Session)?;
        let mut plan = Vec::new();
        for (b, spec) in bindings.into_iter().zip(&p.sessions) {
            let key = alpha_normalize(&b.global);
            let idx = match instances.iter().position(|i| i.key == key) {
                Some(i) => i,
                None => {
                    let name = render_type(&spec.proto);
                    instances.push(Instance { key, name, global: b.global.clone(), players: BTreeMap::new() });
                    instances.len() - 1
                }
            };
            let inst = &mut instances[idx];
            if let Some(first) = inst.players.insert(b.role.clone(), p.name.clone()) {
                return Err(SetupError::Duplicate {
                    protocol: inst.name.clone(),
                    role: b.role,
                    first,
                    second: p.name.clone(),
                });
            }
            plan.push((b.var, b.role, idx));
        }
        plans.push(plan);
    }
    for inst in &instances {
        if let Some(r) = inst.global.roles().into_iter().find(|r| !inst.players.contains_key(r)) {
            return Err(SetupError::Unplayed { protocol: inst.name.clone(), role: r });
        }
    }

    let log = TraceLog::new();
    let sessions = instances
        .iter()
        .map(|i| GlobalSession::with_log(i.name.clone(), i.global.clone(), log.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let abort_all = || sessions.iter().for_each(GlobalSession::abort);
    let timed_out = AtomicBool::new(false);

    let results: Vec<Result<(), RuntimeError>> = thread::scope(|s| {
        let (done_tx, done_rx) = crossbeam_channel::bounded::<()>(0);
        if let Some(deadline) = opts.deadline {
            let (timed_out, abort_all) = (&timed_out, &abort_all);
            s.spawn(move || {
                if let Err(crossbeam_channel::RecvTimeoutError::Timeout) = done_rx.recv_timeout(deadline) {
                    timed_out.store(true, Ordering::SeqCst);
                    abort_all();
                }
            });
        }
        let handles: Vec<_> = file
            .procs
            .iter()
            .zip(&plans)
            .map(|(p, plan)| {
                let (sessions, sorts, abort_all) = (&sessions, &sorts, &abort_all);
                s.spawn(move || {
                    // one helper per session: a process playing in several sessions
                    // must not wait at one barrier while another still needs it
                    let inits: Vec<Result<_, RuntimeError>> = thread::scope(|s2| {
                        let hs: Vec<_> = plan
                            .iter()
                            .map(|(var, role, idx)| s2.spawn(move || Ok((var.clone(), sessions[*idx].init(role)?))))
                            .collect();
                        hs.into_iter().map(|h| h.join().expect("init thread")).collect()
                    });
                    let mut env = Bindings::new();
                    for r in inits {
                        match r {
                            Ok((var, ep)) => {
                                env.insert(var, Value::Endpoint(ep));
                            }
                            Err(e) => {
                                abort_all();
                                return Err(e);
                            }
                        }
                    }
                    let out = run(env, &p.body, sorts).map(|_| ());
                    if out.is_err() {
                        abort_all();
                    }
                    out
                })
            })
            .collect();
        let results = handles.into_iter().map(|h| h.join().expect("process thread")).collect();
        drop(done_tx);
        results
    });

    Ok(RunReport {
        procs: file.procs.iter().zip(results).map(|(p, result)| ProcOutcome { name: p.name.clone(), result }).collect(),
        trace: log.snapshot(),
        timed_out: timed_out.load(Ordering::SeqCst),
        sessions,
    })
}
