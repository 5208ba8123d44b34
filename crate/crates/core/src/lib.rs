//! Tabled evaluation of Horn-clause programs.
//!
//! The crate covers the full pipeline: terms and unification ([`term`]), the
//! program reader and printer ([`program`]), the `table_index` compiler
//! ([`index`]), answer tables with trie indexing ([`trie`], [`table`]), the
//! multiple-machine engine ([`engine`]), a bottom-up reference evaluator
//! ([`oracle`]), the propositional meta-interpreter workload ([`meta`]) and
//! its timing harness ([`bench`]), and the shipped example programs ([`workload`]).

pub mod bench;
pub mod error;
pub mod index;
pub mod program;
pub mod table;
pub mod term;
pub mod trie;
pub mod workload;
pub mod engine;
pub mod meta;
pub mod oracle;

pub use error::{Error, Result};
