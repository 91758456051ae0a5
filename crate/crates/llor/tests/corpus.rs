//! Golden-corpus regression suite. `corpus/manifest.json` freezes the
//! expected outcome of every program; these tests replay each repair through
//! the library and compare every recorded detail, then check properties the
//! manifest cannot express (oracle safety of outputs, convergence on
//! re-repair, strategy parity).

mod common;

use common::*;
use llor::engine::{repair, Budget, RepairOutcome, Strategy};
use llor::instrument::instrument;
use llor::oracle::oracle_race_check;
use llor::parse::{parse, ParseError};
use llor::verify::{verify, VerificationResult};
use std::fs;

/// The category label the CLI prints, reconstructed from a library outcome.
fn category_label(outcome: &RepairOutcome) -> String {
    match outcome {
        RepairOutcome::Repaired(r) => {
            let total = r.candidate.edits.len();
            if r.iterations == 1 {
                if total == 0 {
                    "SAFE-no-changes".to_string()
                } else {
                    format!("CHANGES-RECOMMENDED {total}-removals")
                }
            } else {
                format!("REPAIRED {total}-edits")
            }
        }
        RepairOutcome::CannotRepair(_) => "CANNOT-REPAIR".to_string(),
        RepairOutcome::Unsupported { .. } => "UNSUPPORTED".to_string(),
        RepairOutcome::Timeout { .. } => "TIMEOUT".to_string(),
    }
}

#[test]
fn every_manifest_entry_replays_exactly() {
    let manifest = manifest();
    let files = manifest["files"].as_array().expect("manifest files array");
    assert_eq!(
        files.len(),
        corpus_sources().len(),
        "manifest and corpus disagree on file count"
    );

    for entry in files {
        let name = entry["name"].as_str().unwrap();
        let category = entry["category"].as_str().unwrap();
        let source = fs::read_to_string(corpus_dir().join(name)).unwrap();

        if category == "UNSUPPORTED" {
            match parse(&source) {
                Err(ParseError::Unsupported { loc, construct }) => {
                    assert_eq!(construct, entry["construct"].as_str().unwrap(), "{name}");
                    assert_eq!(
                        u64::from(loc.line),
                        entry["line"].as_u64().unwrap(),
                        "{name}"
                    );
                }
                other => panic!("{name}: expected an unsupported-construct error, got {other:?}"),
            }
            continue;
        }

        let ip = load_corpus_program(name);
        let outcome = repair(&ip, Strategy::Mhs, &Budget::default());
        assert_eq!(
            category_label(&outcome),
            category,
            "{name}: category changed"
        );

        match outcome {
            RepairOutcome::Repaired(r) => {
                assert_eq!(
                    entry["iterations"].as_u64().unwrap(),
                    r.iterations,
                    "{name}: iteration count changed"
                );
                let expected_ids: Vec<u32> = entry["enabledIds"]
                    .as_array()
                    .map(|ids| ids.iter().map(|v| v.as_u64().unwrap() as u32).collect())
                    .unwrap_or_default();
                assert_eq!(
                    r.sol.enabled_ids(),
                    expected_ids,
                    "{name}: solution changed"
                );

                let expected_edits: Vec<(String, u64)> = entry["edits"]
                    .as_array()
                    .map(|edits| {
                        edits
                            .iter()
                            .map(|e| (e[0].as_str().unwrap().to_string(), e[1].as_u64().unwrap()))
                            .collect()
                    })
                    .unwrap_or_default();
                let actual_edits: Vec<(String, u64)> = r
                    .candidate
                    .edits
                    .iter()
                    .map(|e| (e.action_name().to_string(), u64::from(e.loc.line)))
                    .collect();
                assert_eq!(actual_edits, expected_edits, "{name}: edit list changed");

                assert!(r.optimal, "{name}: solution no longer minimal");
                if entry["byteIdentical"].as_bool() == Some(true) {
                    assert_eq!(
                        r.candidate.source, source,
                        "{name}: output should equal input"
                    );
                } else {
                    assert_ne!(
                        r.candidate.source, source,
                        "{name}: output should differ from input"
                    );
                }
            }
            RepairOutcome::CannotRepair(c) => {
                assert_eq!(
                    entry["iterations"].as_u64().unwrap(),
                    c.iterations,
                    "{name}: iteration count changed"
                );
                assert_eq!(
                    llor::emit::cannot_repair_reason(&c.reason),
                    entry["reason"].as_str().unwrap(),
                    "{name}: failure reason changed"
                );
            }
            other => panic!("{name}: unexpected outcome {other:?}"),
        }
    }
}

#[test]
fn strategies_agree_on_the_whole_corpus() {
    for (name, ip) in parseable_corpus() {
        let greedy = repair(&ip, Strategy::Mhs, &Budget::default());
        let exact = repair(&ip, Strategy::MaxSat, &Budget::default());
        assert_eq!(
            category_label(&greedy),
            category_label(&exact),
            "{name}: strategies disagree on the category"
        );
        if let (RepairOutcome::Repaired(g), RepairOutcome::Repaired(e)) = (&greedy, &exact) {
            assert_eq!(
                g.sol.enabled_ids(),
                e.sol.enabled_ids(),
                "{name}: strategies picked different placements"
            );
            assert_eq!(
                g.candidate.source, e.candidate.source,
                "{name}: emitted programs differ"
            );
            assert!(
                g.optimal && e.optimal,
                "{name}: a strategy reported a non-minimal answer"
            );
        }
    }
}

#[test]
fn repaired_outputs_are_oracle_safe_as_written() {
    for (name, ip) in parseable_corpus() {
        let RepairOutcome::Repaired(r) = repair(&ip, Strategy::Mhs, &Budget::default()) else {
            continue;
        };
        let program = parse(&r.candidate.source)
            .unwrap_or_else(|e| panic!("{name}: emitted output reparse: {e}"));
        let emitted = instrument(&program);
        let written = as_written(&emitted);
        assert_eq!(
            verify(&emitted, &written),
            VerificationResult::Safe,
            "{name}: emitted program fails verification as written"
        );
        let races = oracle_race_check(&emitted, &written, 3)
            .unwrap_or_else(|e| panic!("{name}: oracle rejected the emitted program: {e}"));
        assert!(
            races.is_empty(),
            "{name}: oracle races in emitted program: {races:?}"
        );
    }
}

/// Feeding a repaired program back in must reach a fixpoint quickly: the
/// output stays safe every round, never needs more synchronization, and
/// stops changing. A moved ordered region can take one extra round because
/// the marker it inherits sits at the old block's position, so the region is
/// re-anchored on the access itself the next time through.
#[test]
fn repairing_a_repaired_program_reaches_a_fixpoint() {
    for (name, ip) in parseable_corpus() {
        let RepairOutcome::Repaired(first) = repair(&ip, Strategy::Mhs, &Budget::default()) else {
            continue;
        };
        let mut source = first.candidate.source.clone();
        let mut enabled = first.sol.count_enabled();
        let mut settled = false;
        for round in 0..3 {
            let mut program = parse(&source).unwrap();
            program.name = format!("{name}.round{round}");
            let again = instrument(&program);
            match repair(&again, Strategy::Mhs, &Budget::default()) {
                RepairOutcome::Repaired(next) => {
                    assert!(
                        next.sol.count_enabled() <= enabled,
                        "{name}: round {round} wants more synchronization"
                    );
                    if next.candidate.edits.is_empty() {
                        assert_eq!(
                            next.candidate.source, source,
                            "{name}: zero edits but new bytes"
                        );
                        settled = true;
                        break;
                    }
                    enabled = next.sol.count_enabled();
                    source = next.candidate.source;
                }
                other => panic!("{name}: round {round} failed: {other:?}"),
            }
        }
        assert!(settled, "{name}: no fixpoint within three rounds");
    }
}
