use proptest::prelude::*;

use mpstkit::ast::{
    alpha_normalize, struct_eq, substitute, unfold, unfold_counted, well_formed, GlobalType, LocalType, RecursiveType,
    Violation,
};
use mpstkit_testkit::gen::{arb_global, arb_local};
use mpstkit_testkit::oracle::{
    alpha_eq, fresh_names, head_loop_depth, mutate_global, rename_binders, WfMutation, WF_MUTATIONS,
};

const ROLES: &[&str] = &["A", "B", "C"];

fn variant<T: RecursiveType>(t: &T, prefix: &str) -> T {
    rename_binders(t, &mut fresh_names(prefix))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn unfold_is_substitution(g in arb_global(ROLES)) {
        if let GlobalType::Loop { var, body } = &g {
            if !matches!(**body, GlobalType::Loop { .. }) {
                prop_assert_eq!(unfold(&g), substitute(body.as_ref(), var, &g));
            }
        }
    }

    #[test]
    fn unfold_steps_bounded_by_head_loops(g in arb_global(ROLES), l in arb_local("A", &["B", "C"])) {
        let (u, n) = unfold_counted(&g);
        prop_assert!(n <= head_loop_depth(&g));
        prop_assert!(u.as_loop().is_none());
        let (u, n) = unfold_counted(&l);
        prop_assert!(n <= head_loop_depth(&l));
        prop_assert!(u.as_loop().is_none());
    }

    #[test]
    fn alpha_normalize_idempotent(g in arb_global(ROLES), l in arb_local("A", &["B"])) {
        let n = alpha_normalize(&g);
        prop_assert_eq!(alpha_normalize(&n), n);
        let n = alpha_normalize(&l);
        prop_assert_eq!(alpha_normalize(&n), n);
    }

    #[test]
    fn struct_eq_is_an_equivalence(a in arb_global(ROLES), b in arb_global(ROLES)) {
        let a1 = variant(&a, "P");
        let a2 = variant(&a1, "Q");
        prop_assert!(struct_eq(&a, &a));
        prop_assert!(struct_eq(&a, &a1) && struct_eq(&a1, &a));
        prop_assert!(struct_eq(&a1, &a2) && struct_eq(&a, &a2));
        prop_assert_eq!(struct_eq(&a, &b), struct_eq(&b, &a));
        if struct_eq(&a, &b) {
            prop_assert!(struct_eq(&a1, &b));
        }
    }

    #[test]
    fn struct_eq_agrees_with_binder_positions(a in arb_local("A", &["B"]), b in arb_local("A", &["B"])) {
        prop_assert_eq!(struct_eq(&a, &b), alpha_eq(&a, &b));
        let a1 = variant(&a, "R");
        prop_assert!(alpha_eq(&a, &a1));
        prop_assert!(struct_eq(&a, &a1));
    }

    #[test]
    fn mutations_break_well_formedness(g in arb_global(ROLES), which in 0..4usize, at in any::<usize>()) {
        prop_assert!(well_formed(&g).is_ok());
        let m = WF_MUTATIONS[which];
        if let Some(bad) = mutate_global(&g, m, at) {
            let errs = well_formed(&bad).expect_err("mutated type accepted");
            let hit = errs.iter().any(|e| {
                matches!(
                    (m, &e.violation),
                    (WfMutation::DuplicateSort, Violation::DuplicateSort { .. })
                        | (WfMutation::SelfCommunication, Violation::SelfCommunication { .. })
                        | (WfMutation::FreeVariable, Violation::UnboundRecursionVariable { .. })
                        | (WfMutation::Unguarded, Violation::NonContractive { .. })
                )
            });
            prop_assert!(hit, "{:?} on {} gave {:?}", m, bad, errs);
        }
    }
}

#[test]
fn unguarded_mutation_is_detected_on_a_fixed_case() {
    let g = GlobalType::com("A", "B", vec![(mpstkit::ast::Sort::unit("Ok"), GlobalType::End)]);
    let bad = mutate_global(&g, WfMutation::Unguarded, 1).unwrap();
    assert!(well_formed(&bad).is_err());
    let l: LocalType = LocalType::rec("X", LocalType::var("X"));
    assert!(well_formed(&l).is_err());
}
