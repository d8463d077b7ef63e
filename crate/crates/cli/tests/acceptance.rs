//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use mpstkit::ast::{struct_eq, LocalType, Role, Sort};
use mpstkit::consistency::consistent;
use mpstkit::fsm::{interpret, Fsm};
use mpstkit::projection::project;
use mpstkit::runtime::{replay, run_file, RunOptions, RunReport, RuntimeError, Step};
use mpstkit::surface::parse_protocol_file;
use mpstkit::typecheck::check_file;
use mpstkit_cli::{bench_file, corpus_files};
use mpstkit_testkit::corpus::{self, CONSISTENCY_TABLE, RUNTIME_MUTATION, STATIC_MUTATIONS};
use mpstkit_testkit::gen::{arb_local, arb_loop_headed_local, arb_projectable};
use mpstkit_testkit::laws::{corpus_traces_replay, dual_agrees, merge_laws_of, unfold_stable};
use mpstkit_testkit::synth::Breakage;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn run(file: &mpstkit::surface::ProtocolFile) -> RunReport {
    run_file(file, &RunOptions { deadline: Some(Duration::from_secs(10)) }).expect("session setup")
}

fn send(from: &str, to: &str, bs: Vec<(Sort, LocalType)>) -> LocalType {
    LocalType::send(from, to, bs)
}

fn recv(from: &str, to: &str, bs: Vec<(Sort, LocalType)>) -> LocalType {
    LocalType::recv(from, to, bs)
}

fn projection_goldens() -> Verdict {
    let start = Instant::now();
    let (propose, accept, reject, confirm) =
        (Sort::int("Propose"), Sort::unit("Accept"), Sort::unit("Reject"), Sort::unit("Confirm"));
    let bob = recv(
        "A",
        "B",
        vec![(
            propose.clone(),
            LocalType::rec(
                "X",
                send(
                    "B",
                    "A",
                    vec![
                        (accept.clone(), recv("A", "B", vec![(confirm.clone(), LocalType::End)])),
                        (reject.clone(), LocalType::End),
                        (
                            propose.clone(),
                            recv(
                                "A",
                                "B",
                                vec![
                                    (accept, send("B", "A", vec![(confirm, LocalType::End)])),
                                    (reject, LocalType::End),
                                    (propose, LocalType::var("X")),
                                ],
                            ),
                        ),
                    ],
                ),
            ),
        )],
    );
    let (string, int, date) = (Sort::string("String"), Sort::int("Int"), Sort::string("Date"));
    let merged = recv(
        "B2",
        "S",
        vec![
            (Sort::unit("Ok"), recv("B2", "S", vec![(string.clone(), send("S", "B2", vec![(date, LocalType::End)]))])),
            (Sort::unit("Quit"), LocalType::End),
        ],
    );
    let seller =
        recv("B1", "S", vec![(string, send("S", "B1", vec![(int.clone(), send("S", "B2", vec![(int, merged)]))]))]);

    let got_bob =
        project(&corpus::protocol("reference/negotiation.mpst", "S"), &Role::new("B")).map_err(|e| e.to_string())?;
    let got_seller =
        project(&corpus::protocol("reference/two_buyer.mpst", "S"), &Role::new("S")).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !struct_eq(&got_bob, &bob) {
        return Err(format!("negotiation B: got {got_bob}"));
    }
    if !struct_eq(&got_seller, &seller) {
        return Err(format!("two-buyer S: got {got_seller}"));
    }
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("negotiation B and two-buyer S exact, {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

fn consistency_table() -> Verdict {
    let mut wrong = Vec::new();
    let mut mandatory_wrong = Vec::new();
    for (rel, name, want) in CONSISTENCY_TABLE {
        let got = consistent(&corpus::protocol(rel, name)).consistent;
        if got != want {
            wrong.push(format!("{rel} {name}: got {got}"));
            if corpus::is_mandatory(rel) {
                mandatory_wrong.push(format!("{rel} {name}"));
            }
        }
    }
    if !mandatory_wrong.is_empty() {
        return Err(format!("mandatory rows wrong: {}", mandatory_wrong.join(", ")));
    }
    let rows = CONSISTENCY_TABLE.len();
    if wrong.is_empty() {
        Ok(format!("{rows}/{rows} rows match"))
    } else {
        Ok(format!("mandatory rows match; {} of {rows} optional rows differ: {}", wrong.len(), wrong.join("; ")))
    }
}

fn mutations() -> Verdict {
    let mut passed = 0;
    let mut problems = Vec::new();
    for (rel, class, line) in STATIC_MUTATIONS {
        let diags = check_file(&corpus::load(rel));
        if diags.iter().any(|d| d.is_error() && d.class.as_str() == class && d.pos.line == line) {
            passed += 1;
        } else {
            let seen: Vec<String> = diags.iter().map(|d| d.render(rel)).collect();
            problems.push(format!("{rel}: want {class} at line {line}, got [{}]", seen.join("; ")));
        }
    }
    let file = corpus::load(RUNTIME_MUTATION);
    let statically = check_file(&file).iter().any(|d| d.is_error());
    let report = run(&file);
    let faults: Vec<_> = report.root_faults().collect();
    if statically && faults.len() == 1 && faults[0].1.kind() == "linearity-fault" {
        passed += 1;
    } else {
        problems.push(format!("{RUNTIME_MUTATION}: rejected statically {statically}, faults {faults:?}"));
    }
    if problems.is_empty() {
        Ok(format!("{passed}/5"))
    } else {
        Err(format!("{passed}/5; {}", problems.join(" | ")))
    }
}

fn trace_replay() -> Verdict {
    let want = ["Propose(5)", "Propose(11)", "Propose(6)", "Propose(11)", "Reject()"];
    let file = corpus::load("reference/negotiation.mpst");
    for i in 0..100 {
        let r = run(&file);
        let got: Vec<String> = r.trace.communications().map(|e| format!("{}({})", e.sort, e.payload)).collect();
        if !r.ok() || got != want {
            return Err(format!("run {}: {got:?} (ok {})", i + 1, r.ok()));
        }
    }
    Ok("100/100 runs give the expected five messages".into())
}

fn seller_source(rel: &str) -> Result<String, String> {
    let src = corpus::source(rel);
    let f = parse_protocol_file(&src).map_err(|e| format!("{e:?}"))?;
    let p = f.proc("seller").ok_or_else(|| format!("{rel}: no seller"))?;
    Ok(src[p.span.clone()].to_string())
}

fn delegation() -> Verdict {
    if seller_source("reference/two_buyer.mpst")? != seller_source("reference/three_buyer.mpst")? {
        return Err("seller definitions differ".into());
    }
    let r = run(&corpus::load("reference/three_buyer.mpst"));
    if !r.ok() {
        return Err(format!("three-buyer faults: {:?}", r.root_faults().collect::<Vec<_>>()));
    }
    let mut names = Vec::new();
    for s in &r.sessions {
        let steps: Vec<Step> = r.trace.session(s.name()).map(Step::from).collect();
        let acc = replay(s.protocol(), &steps).map_err(|e| e.to_string())?;
        if !acc.is_terminated() {
            return Err(format!("session {} did not complete", s.name()));
        }
        names.push(s.name().to_string());
    }
    if names.len() != 2 {
        return Err(format!("sessions {names:?}"));
    }
    // buyer 2 keeps using its seller session after handing it to buyer 3
    let misuse = corpus::source("reference/three_buyer.mpst")
        .replace("u.recv B3 { Ok -> end, Quit -> end }", "s.send B1 Quit; u.recv B3 { Ok -> end, Quit -> end }");
    let r = run(&parse_protocol_file(&misuse).map_err(|e| format!("{e:?}"))?);
    let faults: Vec<_> = r.root_faults().collect();
    match faults.as_slice() {
        [(_, RuntimeError::Linearity { .. })] => {}
        _ => return Err(format!("use after delegation: {faults:?}")),
    }
    Ok("both sessions complete, seller identical, use after delegation faults".into())
}

/// Edges `(from, label, to)` of a canonical machine.
fn edges(f: &Fsm) -> Vec<(usize, String, usize)> {
    f.canonical().transitions.iter().map(|t| (t.from, t.action.label(), t.to)).collect()
}

fn fsm_iso() -> Verdict {
    let bob =
        project(&corpus::protocol("reference/negotiation.mpst", "S"), &Role::new("B")).map_err(|e| e.to_string())?;
    let got = interpret(&bob);
    // the published machine, states numbered as drawn, final state 5
    let figure = [
        (1, "AB?Propose", 2),
        (2, "BA!Propose", 3),
        (2, "BA!Accept", 4),
        (2, "BA!Reject", 5),
        (3, "AB?Propose", 2),
        (3, "AB?Reject", 5),
        (3, "AB?Accept", 6),
        (4, "AB?Confirm", 5),
        (6, "BA!Confirm", 5),
    ];
    let sort = |name: &str| match name {
        "Propose" => Sort::int(name),
        _ => Sort::unit(name),
    };
    let expected = Fsm {
        states: (1..=6).collect(),
        initial: 1,
        finals: [5].into(),
        transitions: figure
            .iter()
            .map(|(from, label, to)| {
                let send = label.contains('!');
                let (p, q) = (Role::new(&label[..1]), Role::new(&label[1..2]));
                let (self_role, peer) = if send { (p, q) } else { (q, p) };
                mpstkit::fsm::Transition {
                    from: *from,
                    action: mpstkit::fsm::Action {
                        direction: if send { mpstkit::fsm::Direction::Send } else { mpstkit::fsm::Direction::Recv },
                        peer,
                        self_role,
                        sort: sort(&label[3..]),
                    },
                    to: *to,
                }
            })
            .collect(),
    };
    let (n, m, finals) = (got.states.len(), got.transitions.len(), got.finals.len());
    if (n, m, finals) != (6, 9, 1) {
        return Err(format!("{n} states, {m} transitions, {finals} final states"));
    }
    if edges(&got) != edges(&expected) || got.canonical().finals != expected.canonical().finals {
        return Err(format!("not isomorphic: {:?}", edges(&got)));
    }
    Ok("6 states, 9 transitions, one final state, isomorphic".into())
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, max_global_rejects: 100_000, failure_persistence: None, ..Config::default() })
}

fn fail<T: std::fmt::Debug>(what: &str, e: proptest::test_runner::TestError<T>) -> String {
    format!("{what}: {e}")
}

fn property_suites() -> Verdict {
    runner(1000)
        .run(&arb_projectable(&["A", "B", "C"]), |g| merge_laws_of(&g).map_err(TestCaseError::fail))
        .map_err(|e| fail("merge laws", e))?;
    runner(1000)
        .run(&arb_local("A", &["B"]), |l| dual_agrees(&l).map_err(TestCaseError::fail))
        .map_err(|e| fail("duality oracle", e))?;
    let breakages = [Breakage::UnknownSort, Breakage::DropArm, Breakage::FlipAction];
    let stability = (
        arb_loop_headed_local("A", &["B", "C"]),
        prop::collection::vec(any::<u8>(), 1..8),
        prop::option::of((0..3usize, any::<usize>())),
    );
    runner(200)
        .run(&stability, |(l, picks, broken)| {
            unfold_stable(&l, picks, broken.map(|(b, at)| (breakages[b], at))).map_err(TestCaseError::fail)
        })
        .map_err(|e| fail("unfold stability", e))?;
    corpus_traces_replay(3).map_err(|e| format!("trace replay: {e}"))?;
    Ok("merge 1000, duality 1000, unfold stability 200, corpus trace replay: zero failures".into())
}

fn bench_budget() -> Verdict {
    let dir = corpus::fixtures_dir().join("reference");
    let files = corpus_files(&dir).map_err(|e| e.to_string())?;
    if files.len() != 4 {
        return Err(format!("{} reference fixtures", files.len()));
    }
    let mut worst = 0.0f64;
    for f in &files {
        let row = bench_file(Path::new(f), 31)?;
        if row.max_ms >= 100.0 {
            return Err(format!("{}: slowest of 31 runs {:.3} ms", row.file, row.max_ms));
        }
        worst = worst.max(row.max_ms);
    }
    Ok(format!("4 files x 31 runs, slowest run {worst:.3} ms"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("projection goldens", projection_goldens),
        ("consistency truth table", consistency_table),
        ("mutation suite", mutations),
        ("trace replay", trace_replay),
        ("delegation", delegation),
        ("fsm isomorphism", fsm_iso),
        ("property suites", property_suites),
        ("check time budget", bench_budget),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match verdict {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
