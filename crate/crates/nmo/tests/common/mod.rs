//! Helpers shared by the integration tests and the acceptance runner.

#![allow(dead_code)]

#[path = "../../../core/tests/support/mod.rs"]
pub mod support;

pub mod checks;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const SCENARIOS: [&str; 6] = [
    "lime-trees/lime-trees.rls",
    "stratified/stratified.rls",
    "transitive-closure/tc.rls",
    "chase/chase.rls",
    "divergent/divergent.rls",
    "unstratifiable/unstratifiable.rls",
];

pub fn scenario(relative: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(relative)
}

pub fn data(relative: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(relative)
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command line in process.
pub fn nmo<S: AsRef<str>>(args: &[S]) -> Output {
    let mut argv = vec!["nmo".to_string()];
    argv.extend(args.iter().map(|a| a.as_ref().to_string()));
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = nmo::cli::main_with_args(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

/// `nmo run` of a scenario exporting into `dir`.
pub fn run_scenario(relative: &str, dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run".to_string(),
        scenario(relative).display().to_string(),
        "--export-dir".to_string(),
        dir.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    nmo(&args)
}

/// Contents of every file in a directory, by file name.
pub fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return BTreeMap::new();
    };
    entries
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

/// Value of a `key=` line in a run report.
pub fn report_value(stdout: &str, key: &str) -> Option<u64> {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('=')?.trim().parse().ok())
}

/// Count printed for `predicate` under `derived facts:`.
pub fn derived_count(stdout: &str, predicate: &str) -> Option<usize> {
    stdout
        .lines()
        .find_map(|l| l.trim().strip_prefix(predicate)?.strip_prefix(": ")?.parse().ok())
}
