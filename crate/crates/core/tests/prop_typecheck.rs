use proptest::prelude::*;

use mpstkit::ast::{LocalType, Role};
use mpstkit::typecheck::{check_process, Diagnostic, ErrorClass, ProcessTerm, TypingEnv};
use mpstkit_testkit::gen::{arb_local, arb_loop_headed_local};
use mpstkit_testkit::laws::unfold_stable;
use mpstkit_testkit::sort_table;
use mpstkit_testkit::synth::{break_process, cycle, Breakage, Synth};

const BREAKAGES: [Breakage; 3] = [Breakage::UnknownSort, Breakage::DropArm, Breakage::FlipAction];

fn check(l: &LocalType, p: &ProcessTerm) -> Result<(), Vec<Diagnostic>> {
    check_process(&TypingEnv::new().with_session("s", Role::new("A"), l.clone()), p, &sort_table())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn checking_is_stable_under_unfolding(
        l in arb_loop_headed_local("A", &["B", "C"]),
        picks in prop::collection::vec(any::<u8>(), 1..8),
        broken in prop::option::of((0..3usize, any::<usize>())),
    ) {
        unfold_stable(&l, picks, broken.map(|(b, at)| (BREAKAGES[b], at))).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn any_offered_send_branch_checks(l in arb_local("A", &["B", "C"]), picks in prop::collection::vec(any::<u8>(), 1..8)) {
        let p = Synth::default().implement(&l, "s", &mut cycle(picks));
        prop_assert_eq!(check(&l, &p), Ok(()));
    }

    #[test]
    fn omitting_a_receive_branch_fails(l in arb_local("A", &["B", "C"]), at in any::<usize>()) {
        let p = Synth::default().implement(&l, "s", &mut cycle(vec![0]));
        if let Some(q) = break_process(&p, Breakage::DropArm, at) {
            let errs = check(&l, &q).expect_err("receive without all branches accepted");
            prop_assert!(errs.iter().any(|d| d.class == ErrorClass::MissingRecvBranch), "{:?}", errs);
        }
    }
}
