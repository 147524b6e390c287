//! File formats and the command-line client for the nmo Datalog engine.
//!
//! [`io`] reads CSV, TSV, N-Triples and fact files (optionally gzipped) and
//! writes results as CSV or N-Triples. [`cli`] wires parsing, loading,
//! reasoning and export together behind `nmo run`.

pub mod cli;
pub mod io;
