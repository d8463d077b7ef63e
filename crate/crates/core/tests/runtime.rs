use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use mpstkit::ast::{GlobalType, Role, Sort};
use mpstkit::runtime::{
    replay, run_file, EventKind, GlobalSession, RunOptions, RunReport, RuntimeError, Step, Trace, Value,
};
use mpstkit::surface::{instantiate_ref, parse_protocol_file, ProtocolFile, TypeExpr};
use mpstkit::typecheck::Pos;

fn fixture(rel: &str) -> ProtocolFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel);
    parse_protocol_file(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn global(file: &ProtocolFile, name: &str) -> GlobalType {
    instantiate_ref(file, &TypeExpr::Ref { pos: Pos::default(), name: name.into(), args: vec![] }).unwrap()
}

fn run(file: &ProtocolFile) -> RunReport {
    run_file(file, &RunOptions { deadline: Some(Duration::from_secs(10)) }).unwrap()
}

fn messages(t: &Trace) -> Vec<String> {
    t.communications().map(|e| format!("{}({})", e.sort, e.payload)).collect()
}

#[test]
fn negotiation_run_three() {
    let file = fixture("reference/negotiation.mpst");
    let first = run(&file);
    assert!(first.ok(), "{:?}", first.procs);
    assert_eq!(messages(&first.trace), ["Propose(5)", "Propose(11)", "Propose(6)", "Propose(11)", "Reject()"]);
    let text = first.trace.render_text();
    assert_eq!(text.lines().next(), Some("seq 1: A -> B : Propose(5)"));
    assert_eq!(text.lines().last(), Some("seq 5: A -> B : Reject()"));
    for _ in 0..20 {
        assert_eq!(run(&file).trace.render_text(), text);
    }
}

#[test]
fn two_buyer_runs() {
    let file = fixture("reference/two_buyer.mpst");
    let r = run(&file);
    assert!(r.ok(), "{:?}", r.procs);
    // the two quotes and Buyer1's share may interleave
    let mut got = messages(&r.trace);
    got.sort();
    let mut want = [
        "String(\"Types and Programming Languages\")",
        "Int(11)",
        "Int(11)",
        "Int(6)",
        "Ok()",
        "Ok()",
        "String(\"Dept. of Computer Science\")",
        "Date(\"2026-12-24\")",
    ]
    .map(String::from)
    .to_vec();
    want.sort();
    assert_eq!(got, want);
    assert_eq!(r.trace.communications().count(), 8);
}

#[test]
fn three_buyer_delegation() {
    let file = fixture("reference/three_buyer.mpst");
    let r = run(&file);
    assert!(r.ok(), "{:?}", r.procs);
    let s: Vec<(String, String, String)> = r
        .trace
        .session("S")
        .filter(|e| e.kind == EventKind::Send)
        .map(|e| (e.from.to_string(), e.to.to_string(), e.sort.clone()))
        .collect();
    let u: Vec<(String, String, String)> = r
        .trace
        .session("U")
        .filter(|e| e.kind == EventKind::Send)
        .map(|e| (e.from.to_string(), e.to.to_string(), e.sort.clone()))
        .collect();
    let t = |a: &str, b: &str, c: &str| (a.to_string(), b.to_string(), c.to_string());
    assert_eq!(u, [t("B2", "B3", "Int"), t("B2", "B3", "Delegatee"), t("B3", "B2", "Quit")]);
    assert_eq!(&s[s.len() - 2..], [t("B2", "B1", "Quit"), t("B2", "S", "Quit")]);
    // the seller only ever sees role names of its own session
    for e in r.trace.session("S") {
        assert!(["B1", "B2", "S"].contains(&e.from.name()) && ["B1", "B2", "S"].contains(&e.to.name()));
    }
    for sess in &r.sessions {
        let steps: Vec<Step> = r.trace.session(sess.name()).map(Step::from).collect();
        assert!(replay(sess.protocol(), &steps).unwrap().is_terminated(), "{}", sess.name());
    }
}

#[test]
fn use_after_delegation_faults() {
    let src = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/reference/three_buyer.mpst"),
    )
    .unwrap()
    .replace("u.recv B3 { Ok -> end, Quit -> end }", "s.send B1 Quit; u.recv B3 { Ok -> end, Quit -> end }");
    let r = run(&parse_protocol_file(&src).unwrap());
    let faults: Vec<_> = r.root_faults().collect();
    assert_eq!(faults.len(), 1, "{faults:?}");
    assert_eq!(faults[0].0, "buyer2");
    assert!(matches!(faults[0].1, RuntimeError::Linearity { .. }));
}

#[test]
fn double_recur_faults_at_runtime() {
    let r = run(&fixture("mutations/runtime_linearity.mpst"));
    let faults: Vec<_> = r.root_faults().collect();
    assert_eq!(faults.len(), 1, "{:?}", r.procs);
    assert_eq!(faults[0].0, "bob");
    assert_eq!(faults[0].1.kind(), "linearity-fault");
}

#[test]
fn session_construction() {
    let file = fixture("reference/negotiation.mpst");
    let s = GlobalSession::new(global(&file, "S")).unwrap();
    assert_eq!(s.roles(), [Role::new("A"), Role::new("B")]);
    let bad = GlobalType::com("A", "A", vec![(Sort::unit("Ok"), GlobalType::End)]);
    let err = GlobalSession::new(bad).unwrap_err();
    assert!(err.to_string().contains("sender equals receiver") || matches!(err, RuntimeError::IllFormed(_)), "{err}");
    let u = GlobalSession::new(global(&fixture("reference/three_buyer.mpst"), "U")).unwrap();
    assert_eq!(u.roles(), [Role::new("B2"), Role::new("B3")]);
    assert!(matches!(u.init(&Role::new("Z")), Err(RuntimeError::UnknownRole { .. })));
}

#[test]
fn init_waits_for_every_role() {
    let file = fixture("reference/three_buyer.mpst");
    let s = GlobalSession::new(global(&file, "S")).unwrap();
    assert_eq!(s.roles().len(), 3);
    let (tx, rx) = mpsc::channel();
    let handles: Vec<_> = ["B1", "B2"]
        .into_iter()
        .map(|r| {
            let (s, tx) = (s.clone(), tx.clone());
            thread::spawn(move || {
                let out = s.init(&Role::new(r));
                tx.send(r).unwrap();
                out
            })
        })
        .collect();
    assert!(rx.recv_timeout(Duration::from_millis(200)).is_err(), "init returned before all roles arrived");
    assert_eq!(s.arrived().len(), 2);
    let last = s.init(&Role::new("S")).unwrap();
    for h in handles {
        let ep = h.join().unwrap().unwrap();
        assert!(!ep.is_consumed());
    }
    assert_eq!(last.role(), &Role::new("S"));
    assert!(matches!(s.init(&Role::new("S")), Err(RuntimeError::DoubleInit { .. })));
}

#[test]
fn abort_releases_blocked_init() {
    let s = GlobalSession::new(global(&fixture("reference/negotiation.mpst"), "S")).unwrap();
    let s2 = s.clone();
    let h = thread::spawn(move || s2.init(&Role::new("A")));
    thread::sleep(Duration::from_millis(50));
    s.abort();
    assert!(matches!(h.join().unwrap(), Err(RuntimeError::Aborted { .. })));
}

#[test]
fn endpoints_are_use_once() {
    let s = GlobalSession::new(global(&fixture("reference/negotiation.mpst"), "S")).unwrap();
    let s2 = s.clone();
    let b = thread::spawn(move || s2.init(&Role::new("B")).unwrap());
    let a = s.init(&Role::new("A")).unwrap();
    let b = b.join().unwrap();
    let propose = |n| Value::Int(n);
    let a2 = a.send(&Role::new("B"), propose(5)).unwrap();
    assert!(a.is_consumed() && !a2.is_consumed());
    let (m, _b2) = b.recv(&Role::new("A")).unwrap();
    assert_eq!(m.to_string(), "Propose(5)");
    assert!(matches!(b.recv(&Role::new("A")), Err(RuntimeError::Linearity { .. })));
    assert!(matches!(a.send(&Role::new("B"), propose(6)), Err(RuntimeError::Linearity { .. })));
    // a fault aborts the session
    assert!(s.is_aborted());
}

#[test]
fn per_pair_fifo_and_barrier_order() {
    for rel in ["reference/negotiation.mpst", "reference/two_buyer.mpst", "reference/three_buyer.mpst"] {
        let r = run(&fixture(rel));
        let mut sent: BTreeMap<(String, Role, Role), Vec<u64>> = BTreeMap::new();
        let mut got: BTreeMap<(String, Role, Role), Vec<u64>> = BTreeMap::new();
        let mut subjects = BTreeSet::new();
        for e in &r.trace.events {
            let key = (e.session.clone(), e.from.clone(), e.to.clone());
            match e.kind {
                EventKind::Send => sent.entry(key).or_default().push(e.seq),
                EventKind::Recv => got.entry(key).or_default().push(e.seq),
            }
            assert!(subjects.insert(e.endpoint), "{rel}: endpoint #{} acted twice", e.endpoint);
            let sess = r.sessions.iter().find(|s| s.name() == e.session).unwrap();
            assert!(sess.released_at().unwrap() <= e.at, "{rel}: action before the barrier");
        }
        assert_eq!(sent, got, "{rel}");
    }
}

#[test]
fn acceptor_allows_overtaking_only_when_independent() {
    let two = global(&fixture("reference/two_buyer.mpst"), "S");
    // B1 may send its share before S has sent B2's quote
    let ok = [
        Step::send("B1", "S", "String"),
        Step::recv("B1", "S", "String"),
        Step::send("S", "B1", "Int"),
        Step::recv("S", "B1", "Int"),
        Step::send("B1", "B2", "Int"),
        Step::send("S", "B2", "Int"),
    ];
    assert!(replay(&two, &ok).is_ok());
    // B2 cannot receive from B1 before receiving the quote from S
    let mut bad = ok.to_vec();
    bad.push(Step::recv("B1", "B2", "Int"));
    assert_eq!(replay(&two, &bad).unwrap_err().index, 6);
    let wrong_sort = [Step::send("B1", "S", "Int")];
    assert!(replay(&two, &wrong_sort).is_err());
}
