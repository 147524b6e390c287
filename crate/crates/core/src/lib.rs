//! Datalog materialisation over columnar tries.
//!
//! The crate is `no_std` (it needs `alloc`). Programs are parsed with
//! [`parser::parse_program`], facts are interned into a
//! [`value::Dictionary`] and stored as sorted [`storage::Trie`]s, rule
//! bodies are evaluated with [`join::leapfrog_join`], and
//! [`reasoner::Reasoner`] drives stratified semi-naive evaluation together
//! with the restricted chase for existential rules.
//!
//! Everything touching files, clocks or the terminal lives in the `nmo`
//! crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod join;
pub mod parser;
pub mod reasoner;
pub mod storage;
pub mod value;

pub use parser::{parse_program, Program};
pub use reasoner::{ExecutionReport, Limits, Reasoner};
pub use storage::Trie;
pub use value::{DataValue, Dictionary, ValueId};
