use std::path::PathBuf;

use mpstkit::ast::{LocalType, Role, Sort};
use mpstkit::surface::{parse_protocol_file, ProtocolFile};
use mpstkit::typecheck::{
    check_expr, check_file, DataType, Diagnostic, ErrorClass, Expr, Pos, Severity, SortTable, TypingEnv,
};

fn fixture(rel: &str) -> (String, ProtocolFile) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let file = parse_protocol_file(&text).unwrap_or_else(|e| panic!("{rel}: {e:?}"));
    (text, file)
}

fn errors(rel: &str) -> Vec<Diagnostic> {
    let (_, f) = fixture(rel);
    check_file(&f).into_iter().filter(|d| d.severity == Severity::Error).collect()
}

fn line_of(text: &str, needle: &str) -> u32 {
    text.lines().position(|l| l.contains(needle)).unwrap() as u32 + 1
}

#[test]
fn reference_fixtures_check() {
    for f in [
        "reference/negotiation.mpst",
        "reference/two_buyer.mpst",
        "reference/three_buyer.mpst",
        "reference/authorisation.mpst",
    ] {
        let (_, file) = fixture(f);
        assert_eq!(check_file(&file), vec![], "{f}");
    }
    assert_eq!(errors("generic/negotiation_generic.mpst"), vec![]);
}

fn single(rel: &str, class: ErrorClass, needle: &str) {
    let (text, _) = fixture(rel);
    let errs = errors(rel);
    assert!(!errs.is_empty(), "{rel} accepted");
    let line = line_of(&text, needle);
    for e in &errs {
        assert_eq!(e.pos.line, line, "{rel}: {e}");
    }
    assert_eq!(errs[0].class, class, "{rel}: {errs:?}");
}

#[test]
fn wrong_data_type() {
    single("mutations/wrong_data_type.mpst", ErrorClass::WrongSort, "send A Reject");
    let errs = errors("mutations/wrong_data_type.mpst");
    assert_eq!(errs[0].expected.as_deref(), Some("B -> A ! Confirm"));
    assert_eq!(errs[0].found.as_deref(), Some("B -> A ! Reject"));
}

#[test]
fn wrong_receiver() {
    single("mutations/wrong_receiver.mpst", ErrorClass::WrongPeer, "send C Confirm");
}

#[test]
fn wrong_action() {
    single("mutations/wrong_action.mpst", ErrorClass::WrongActionKind, "recv A { Confirm");
}

#[test]
fn wrong_recursive_type() {
    let rel = "mutations/wrong_recursive_type.mpst";
    single(rel, ErrorClass::WrongRecursiveType, "recur X(error)");
    let classes: Vec<ErrorClass> = errors(rel).iter().map(|d| d.class).collect();
    assert_eq!(classes, vec![ErrorClass::WrongRecursiveType, ErrorClass::LinearityReuse]);
}

#[test]
fn double_recur_is_linearity_reuse() {
    single("mutations/runtime_linearity.mpst", ErrorClass::LinearityReuse, "recur X; recur X");
}

#[test]
fn missing_process_is_a_warning() {
    let (text, _) = fixture("reference/negotiation.mpst");
    let cut = text.find("proc bob").unwrap();
    let f = parse_protocol_file(&text[..cut]).unwrap();
    let diags = check_file(&f);
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].class, ErrorClass::UnimplementedRole);
    assert_eq!(diags[0].severity, Severity::Warning);
    assert!(diags[0].message.contains('B'));
}

#[test]
fn local_assertion_mismatch() {
    let src = "global S = A -> B : X . end; local L of S @ B = A -> B ? Y . end;";
    let d = check_file(&parse_protocol_file(src).unwrap());
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].class, ErrorClass::LocalTypeMismatch);
}

#[test]
fn omitted_recv_branch() {
    let src = "global S = A -> B : { X . end, Y . end };
        proc a plays A in S { send B X }
        proc b plays B in S { recv A { X -> end } }";
    let d = check_file(&parse_protocol_file(src).unwrap());
    assert_eq!(d.len(), 1, "{d:?}");
    assert_eq!(d[0].class, ErrorClass::MissingRecvBranch);
    assert_eq!(d[0].pos.line, 3);
}

#[test]
fn unterminated_session() {
    let src = "global S = A -> B : X . A -> B : Y . end;
        proc a plays A in S { send B X; end }
        proc b plays B in S { recv A { X -> recv A { Y -> end } } }";
    let d = check_file(&parse_protocol_file(src).unwrap());
    assert_eq!(d.len(), 1, "{d:?}");
    assert_eq!(d[0].class, ErrorClass::NonTerminatedSession);
}

#[test]
fn delegated_session_cannot_be_reused() {
    let (text, _) = fixture("reference/three_buyer.mpst");
    let text =
        text.replace("u.recv B3 { Ok -> end, Quit -> end }", "s.send B1 Quit; u.recv B3 { Ok -> end, Quit -> end }");
    let d = check_file(&parse_protocol_file(&text).unwrap());
    assert_eq!(d[0].class, ErrorClass::LinearityReuse, "{d:?}");
}

#[test]
fn expressions() {
    let sorts = SortTable::new();
    let p = Pos::default();
    assert_eq!(check_expr(&TypingEnv::new(), &Expr::Int(0), &sorts, p), Ok(DataType::Int));
    let env = TypingEnv::new().with_data("v", DataType::Sort(Sort::int("Propose")));
    let lt = Expr::Lt(
        Box::new(Expr::Field { base: Box::new(Expr::Var("v".into())), field: "x".into() }),
        Box::new(Expr::Int(11)),
    );
    assert_eq!(check_expr(&env, &lt, &sorts, p), Ok(DataType::Bool));
    let bad = Expr::Sub(Box::new(Expr::Str("a".into())), Box::new(Expr::Int(1)));
    assert_eq!(check_expr(&env, &bad, &sorts, p).unwrap_err().class, ErrorClass::ExprTypeMismatch);
    assert_eq!(check_expr(&env, &Expr::Var("w".into()), &sorts, p).unwrap_err().class, ErrorClass::UnboundVariable);
    let t = LocalType::send("B2", "S", vec![(Sort::unit("Quit"), LocalType::End)]);
    let env = env.with_session("s", Role::new("B2"), t.clone());
    assert_eq!(
        check_expr(&env, &Expr::SessionRef("s".into()), &sorts, p),
        Ok(DataType::Endpoint { role: Role::new("B2"), local: t })
    );
}
