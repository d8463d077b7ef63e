use proptest::prelude::*;

use mpstkit::ast::{struct_eq, LocalType, Role, Sort};
use mpstkit::consistency::{consistent, dual};
use mpstkit::projection::{project, project_all};
use mpstkit::typecheck::{check_process, sort_table, TypingEnv};
use mpstkit_testkit::corpus;
use mpstkit_testkit::gen::{arb_global, arb_local};
use mpstkit_testkit::laws::dual_agrees;
use mpstkit_testkit::oracle::manual_dual;
use mpstkit_testkit::synth::{cycle, Synth};

/// Renames the first branch sort found, depth first.
fn rename_first_sort(l: &LocalType) -> Option<LocalType> {
    match l {
        LocalType::Send { from, to, branches } | LocalType::Recv { from, to, branches } => {
            let mut bs = branches.clone();
            bs[0].0 = Sort::unit("Bogus");
            Some(match l {
                LocalType::Send { .. } => LocalType::send(from.clone(), to.clone(), bs),
                _ => LocalType::recv(from.clone(), to.clone(), bs),
            })
        }
        LocalType::Loop { var, body } => {
            rename_first_sort(body).map(|b| LocalType::Loop { var: var.clone(), body: Box::new(b) })
        }
        _ => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dual_of_manual_dual(l in arb_local("A", &["B"])) {
        dual_agrees(&l).map_err(TestCaseError::fail)?;
        let d = manual_dual(&l);
        if let Some(bad) = rename_first_sort(&d) {
            prop_assert!(!dual(&l, &bad), "{l} vs {bad}");
        }
        if !matches!(l, LocalType::End) && rename_first_sort(&l).is_some() {
            prop_assert!(!dual(&l, &l));
        }
    }

    #[test]
    fn dual_is_symmetric(a in arb_local("A", &["B"]), b in arb_local("B", &["A"])) {
        prop_assert_eq!(dual(&a, &b), dual(&b, &a));
    }

    #[test]
    fn two_role_projections_are_dual(g in arb_global(&["A", "B"])) {
        let (a, b) = (project(&g, &Role::new("A")).unwrap(), project(&g, &Role::new("B")).unwrap());
        prop_assert!(struct_eq(&manual_dual(&a), &b), "{a} vs {b}");
        prop_assert!(dual(&a, &b));
        prop_assert!(consistent(&g).consistent);
    }
}

#[test]
fn inconsistent_protocols_still_project_and_typecheck() {
    let g = corpus::protocol("reference/authorisation.mpst", "S");
    assert!(!consistent(&g).consistent);
    let (sorts, _) = sort_table(&corpus::load("reference/authorisation.mpst"));
    for (role, l) in project_all(&g).unwrap() {
        for pick in 0..2u8 {
            let p = Synth::default().implement(&l, "s", &mut cycle(vec![pick]));
            let env = TypingEnv::new().with_session("s", role.clone(), l.clone());
            assert_eq!(check_process(&env, &p, &sorts), Ok(()), "{role}: {l}");
        }
    }
}
