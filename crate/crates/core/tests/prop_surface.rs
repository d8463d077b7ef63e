use proptest::prelude::*;

use mpstkit::ast::{struct_eq, GlobalType};
use mpstkit::projection::project;
use mpstkit::surface::{instantiate, parse_protocol_file, render_file, ProcDef, ProtocolFile, SessionSpec, TypeExpr};
use mpstkit::typecheck::Pos;
use mpstkit_testkit::corpus;
use mpstkit_testkit::gen::{arb_projectable, build_global, skeleton, sort_decls, HOLE, VARS};
use mpstkit_testkit::oracle::plug;
use mpstkit_testkit::synth::{cycle, Synth};

fn parse(text: &str) -> ProtocolFile {
    parse_protocol_file(text).unwrap_or_else(|e| panic!("{e:?}\n{text}"))
}

#[test]
fn corpus_renders_to_a_fixpoint() {
    for rel in corpus::clean_fixtures() {
        let f = corpus::load(&rel);
        let once = render_file(&f);
        let again = parse(&once);
        assert_eq!(render_file(&again), once, "{rel}");
        for (a, b) in f.procs.iter().zip(&again.procs) {
            assert!(a.body.same_shape(&b.body), "{rel}: {}", a.name);
        }
        for (a, b) in f.globals.iter().zip(&again.globals) {
            assert!(a.body.same_shape(&b.body), "{rel}: {}", a.name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn printed_types_parse_back(g in arb_projectable(&["A", "B", "C"]), picks in prop::collection::vec(any::<u8>(), 1..8)) {
        let text = format!("{}global Main = {g};\n", sort_decls());
        let file = parse(&text);
        let back = instantiate(&file, "Main", &[]).unwrap();
        prop_assert!(struct_eq(&back, &g), "{g}\nvs\n{back}");

        // a process for the first role, through the renderer and the parser
        let Some(role) = g.roles().into_iter().next() else { return Ok(()) };
        let local = project(&g, &role).unwrap();
        let body = Synth::default().implement(&local, "s", &mut cycle(picks));
        let mut with_proc = file.clone();
        with_proc.procs.push(ProcDef {
            pos: Pos::default(),
            name: "a".into(),
            sessions: vec![SessionSpec {
                pos: Pos::default(),
                role: role.name().into(),
                proto: TypeExpr::Ref { pos: Pos::default(), name: "Main".into(), args: vec![] },
                var: "s".into(),
            }],
            body,
            span: 0..0,
        });
        let rendered = render_file(&with_proc);
        let reparsed = parse(&rendered);
        prop_assert!(reparsed.procs[0].body.same_shape(&with_proc.procs[0].body), "{rendered}");
        prop_assert_eq!(render_file(&reparsed), rendered);
    }

    #[test]
    fn instantiation_avoids_capture(body in skeleton(4, 3, true), arg in skeleton(2, 2, false), outer in 0..2usize) {
        // `T`'s own loops reuse the name bound around the use site
        let t_body = build_global(&body, &["P", "Q"], &VARS);
        let x = VARS[outer];
        let arg_g = GlobalType::com("B", "A", vec![(mpstkit_testkit::gen::sort(1), GlobalType::var(x))]);
        let arg_tail = build_global(&arg, &["A", "B"], &VARS);
        let text = format!(
            "{}global T[P: role, Q: role, {HOLE}: protocol] = {t_body};\n\
             global Main = rec {x} . A -> B : {{ Ok . T[A, B, {arg_g}], Stop . {arg_tail} }};\n",
            sort_decls(),
        );
        let file = parse(&text);
        let got = instantiate(&file, "Main", &[]).unwrap();

        let expanded = plug(&build_global(&body, &["A", "B"], &VARS), HOLE, &arg_g);
        let want = GlobalType::rec(
            x,
            GlobalType::com(
                "A",
                "B",
                vec![(mpstkit_testkit::gen::sort(0), expanded), (mpstkit_testkit::gen::sort(3), arg_tail)],
            ),
        );
        prop_assert!(struct_eq(&got, &want), "{text}\ngot  {got}\nwant {want}");
    }
}
