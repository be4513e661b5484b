//! The bundled twelve-gesture inventory: eleven symbolic gestures and one
//! deictic pointing gesture.
//!
//! The published list names "I am exulting" twice; the duplicate is dropped,
//! leaving twelve distinct ids. Reference sentences shipped here are
//! illustrative only. Real deployments supply their own designer-written
//! sets through `refs.json`.

use crate::io::parse_reference_set;
use crate::model::ReferenceSet;

pub const DEFAULT_REFS_JSON: &str = include_str!("../data/refs.json");
pub const MINI_CORPUS_JSONL: &str = include_str!("../data/mini_corpus.jsonl");
pub const MINI_GT_JSONL: &str = include_str!("../data/mini_gt.jsonl");

pub fn default_reference_set() -> ReferenceSet {
    parse_reference_set(DEFAULT_REFS_JSON).expect("bundled refs.json is valid")
}

/// Path of a bundled data file, for examples and tests that go through the CLI.
pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}
