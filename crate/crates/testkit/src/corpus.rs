//! The fixtures shipped in `fixtures/` and their expected verdicts.

use std::path::PathBuf;

use mpstkit::ast::GlobalType;
use mpstkit::surface::{instantiate, parse_protocol_file, ProtocolFile};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn path(rel: &str) -> PathBuf {
    fixtures_dir().join(rel)
}

pub fn source(rel: &str) -> String {
    std::fs::read_to_string(path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn load(rel: &str) -> ProtocolFile {
    parse_protocol_file(&source(rel)).unwrap_or_else(|e| panic!("{rel}: {e:?}"))
}

/// A closed protocol of a fixture.
pub fn protocol(rel: &str, name: &str) -> GlobalType {
    instantiate(&load(rel), name, &[]).unwrap_or_else(|e| panic!("{rel} {name}: {e}"))
}

/// Relative paths of every well-typed fixture (mutations excluded), sorted.
pub fn clean_fixtures() -> Vec<String> {
    let mut out = Vec::new();
    for dir in ["reference", "literature", "generic"] {
        for e in std::fs::read_dir(fixtures_dir().join(dir)).expect("fixture directory") {
            let name = e.expect("entry").file_name().into_string().expect("utf-8 name");
            if name.ends_with(".mpst") {
                out.push(format!("{dir}/{name}"));
            }
        }
    }
    out.sort();
    out
}

/// `(fixture, protocol, consistent)`.
pub const CONSISTENCY_TABLE: [(&str, &str, bool); 17] = [
    ("reference/negotiation.mpst", "S", true),
    ("generic/negotiation_generic.mpst", "S", true),
    ("reference/two_buyer.mpst", "S", true),
    ("reference/three_buyer.mpst", "S", true),
    ("reference/three_buyer.mpst", "U", true),
    ("reference/authorisation.mpst", "S", false),
    ("literature/game.mpst", "Game", true),
    ("literature/adder.mpst", "Adder", true),
    ("literature/fibonacci.mpst", "Fib", true),
    ("literature/http.mpst", "Http", true),
    ("literature/loan.mpst", "Loan", true),
    ("literature/smtp.mpst", "Smtp", true),
    ("literature/oauth2_fragment.mpst", "OAuth", false),
    ("literature/rec_two_buyers.mpst", "RecTwoBuyers", false),
    ("literature/rec_map_reduce.mpst", "MapReduce", false),
    ("literature/mp_workers.mpst", "Workers", false),
    ("literature/booking.mpst", "Booking", false),
];

/// Rows of [`CONSISTENCY_TABLE`] that must match exactly.
pub fn is_mandatory(rel: &str) -> bool {
    rel.starts_with("reference/")
}

/// `(fixture, designated error class, mutated line)` of the compile-time mutations.
pub const STATIC_MUTATIONS: [(&str, &str, u32); 4] = [
    ("mutations/wrong_data_type.mpst", "wrong-sort", 60),
    ("mutations/wrong_receiver.mpst", "wrong-peer", 60),
    ("mutations/wrong_action.mpst", "wrong-action-kind", 60),
    ("mutations/wrong_recursive_type.mpst", "wrong-recursive-type", 63),
];

pub const RUNTIME_MUTATION: &str = "mutations/runtime_linearity.mpst";
