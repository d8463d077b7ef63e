//! Test support for mpstkit: random protocol generators, reference
//! implementations used as oracles, process synthesis, a small execution
//! harness and the fixture corpus.

pub mod corpus;
pub mod exec;
pub mod gen;
pub mod laws;
pub mod oracle;
pub mod synth;

use mpstkit::typecheck::SortTable;

/// Sort table for the labels of [`gen::SORTS`].
pub fn sort_table() -> SortTable {
    (0..gen::SORTS.len() as u8).map(|i| (gen::sort(i).name.clone(), gen::sort(i))).collect()
}
