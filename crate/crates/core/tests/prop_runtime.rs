use std::time::Duration;

use proptest::prelude::*;

use mpstkit::projection::project_all;
use mpstkit::runtime::{replay, run_file, RunOptions, RuntimeError, Step};
use mpstkit_testkit::corpus;
use mpstkit_testkit::exec::{check_barrier, check_fifo, check_use_once, execute};
use mpstkit_testkit::gen::arb_projectable;
use mpstkit_testkit::sort_table;
use mpstkit_testkit::synth::{cycle, Synth};

proptest! {
    #![proptest_config(ProptestConfig { cases: 150, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    /// Loop-free processes, cut after a few actions, on random protocols.
    #[test]
    fn synthesized_runs_are_safe(
        g in arb_projectable(&["A", "B", "C"]),
        picks in prop::collection::vec(any::<u8>(), 1..6),
        budget in 1..10usize,
    ) {
        let procs: Vec<_> = project_all(&g)
            .unwrap()
            .into_iter()
            .map(|(r, l)| {
                let p = Synth::default().unrolled(&l, "s", budget, &mut cycle(picks.clone()));
                (r, p)
            })
            .collect();
        if procs.is_empty() {
            return Ok(());
        }
        let out = execute(&g, procs, &sort_table(), Duration::from_secs(10));
        prop_assert!(!out.timed_out, "{g}: run hung");
        for (role, r) in &out.results {
            // the only faults allowed are the cut itself and its knock-on aborts
            prop_assert!(
                matches!(r, Ok(()) | Err(RuntimeError::Unfinished { .. } | RuntimeError::Aborted { .. })),
                "{g}: {role}: {r:?}"
            );
        }
        let steps: Vec<Step> = out.trace.events.iter().map(Step::from).collect();
        let acc = replay(&g, &steps).map_err(|e| TestCaseError::fail(format!("{g}: {e}")))?;
        if out.all_ok() {
            prop_assert!(acc.is_terminated(), "{g}: finished run not accepted as complete");
        }
        check_fifo(&out.trace).map_err(TestCaseError::fail)?;
        check_use_once(&out.trace).map_err(TestCaseError::fail)?;
        check_barrier(&out.trace, &out.session).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn corpus_traces_are_fifo_use_once_and_after_init() {
    for rel in corpus::clean_fixtures() {
        let f = corpus::load(&rel);
        if f.procs.is_empty() {
            continue;
        }
        for _ in 0..5 {
            let r = run_file(&f, &RunOptions { deadline: Some(Duration::from_secs(10)) }).unwrap();
            assert!(r.ok(), "{rel}");
            check_fifo(&r.trace).unwrap_or_else(|e| panic!("{rel}: {e}"));
            check_use_once(&r.trace).unwrap_or_else(|e| panic!("{rel}: {e}"));
            for s in &r.sessions {
                let t = mpstkit::runtime::Trace { events: r.trace.session(s.name()).cloned().collect() };
                check_barrier(&t, s).unwrap_or_else(|e| panic!("{rel}: {e}"));
            }
        }
    }
}
