//! Helpers shared by the integration suites: corpus loading plus small
//! brute-force reference implementations the tool's answers are checked
//! against.

// Each integration target compiles this module separately and uses its own
// subset of the helpers.
#![allow(dead_code)]

use llor::clause::ClauseSet;
use llor::instrument::{instrument, Assignment, InstrumentedProgram};
use llor::parse::parse;
use llor::verify::{verify, VerificationResult};
use std::fs;
use std::path::{Path, PathBuf};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn manifest() -> serde_json::Value {
    let text = fs::read_to_string(corpus_dir().join("manifest.json")).expect("manifest readable");
    serde_json::from_str(&text).expect("manifest is valid JSON")
}

/// `(file name, source text)` for every corpus program, in name order.
pub fn corpus_sources() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(corpus_dir())
        .expect("corpus directory present")
        .filter_map(|e| {
            let path = e.ok()?.path();
            if path.extension()? != "mmp" {
                return None;
            }
            let name = path.file_name()?.to_string_lossy().into_owned();
            Some((name, fs::read_to_string(&path).ok()?))
        })
        .collect();
    out.sort();
    out
}

/// Corpus programs the parser accepts, instrumented and named by file stem.
pub fn parseable_corpus() -> Vec<(String, InstrumentedProgram)> {
    corpus_sources()
        .into_iter()
        .filter_map(|(name, source)| {
            let mut program = parse(&source).ok()?;
            program.name = name.trim_end_matches(".mmp").to_string();
            Some((name, instrument(&program)))
        })
        .collect()
}

pub fn load_corpus_program(name: &str) -> InstrumentedProgram {
    let source =
        fs::read_to_string(corpus_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    let mut program = parse(&source).unwrap_or_else(|e| panic!("{name}: {e}"));
    program.name = name.trim_end_matches(".mmp").to_string();
    instrument(&program)
}

/// Every truth assignment over `m` variables, all 2^m of them.
pub fn all_assignments(m: usize) -> impl Iterator<Item = Assignment> {
    assert!(m <= 20, "sweep of 2^{m} assignments is not reasonable");
    (0u32..1 << m).map(move |bits| {
        let enabled: Vec<u32> = (0..m as u32).filter(|b| bits & (1 << b) != 0).collect();
        Assignment::from_enabled(m, &enabled)
    })
}

/// The fewest enabled placements any verifier-safe assignment needs, found
/// by checking all of them. `None` when no assignment is safe.
pub fn brute_force_min_safe(ip: &InstrumentedProgram) -> Option<u32> {
    all_assignments(ip.vars.len())
        .filter(|a| matches!(verify(ip, a), VerificationResult::Safe))
        .map(|a| a.count_enabled())
        .min()
}

/// Minimum hitting-set cardinality by exhaustive subset enumeration.
pub fn exhaustive_min_hitting_set(phi: &ClauseSet) -> Option<u32> {
    let m = phi.var_count() as usize;
    assert!(m <= 16, "exhaustive hitting set over 2^{m} subsets");
    let mut best: Option<u32> = None;
    for bits in 0u32..1 << m {
        let hits_all = phi
            .clauses()
            .iter()
            .all(|c| c.iter().any(|&v| bits & (1 << v) != 0));
        if hits_all {
            let size = bits.count_ones();
            best = Some(best.map_or(size, |b| b.min(size)));
        }
    }
    best
}

/// The assignment that reproduces the program exactly as its author wrote
/// it: every variable standing in for an existing construct enabled, all
/// others disabled.
pub fn as_written(ip: &InstrumentedProgram) -> Assignment {
    let enabled: Vec<u32> = ip
        .vars
        .iter()
        .filter(|v| v.from_existing)
        .map(|v| v.id)
        .collect();
    Assignment::from_enabled(ip.vars.len(), &enabled)
}
