//! Output side of the pipeline: repaired source text, JSON summaries, and an
//! edit applier that replays an edit list against the original text.
//!
//! [`apply_edits`] deliberately knows nothing about the candidate renderer's
//! internals; it interprets each edit from its recorded coordinates alone.
//! The two routes must produce identical bytes, which gives the test suite a
//! second, independent witness that the edit list really describes the
//! repaired program.

use crate::candidate::{indent_of, with_ordered_clause, Candidate, Edit, EditAction};
use crate::engine::{CannotRepairReason, RepairOutcome, Strategy};
use crate::parse::source_lines;
use crate::verify::{AccessKind, RaceTrace};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};

/// Summary of a successful repair, the shape written to `<input>.llor.json`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RepairSummary {
    pub program_name: String,
    pub strategy: String,
    pub status: String,
    pub iterations: u64,
    pub edits: Vec<Edit>,
    pub optimal: bool,
    pub enabled_count: u32,
}

/// Source text of the repaired program.
pub fn emit_program(candidate: &Candidate) -> String {
    candidate.source.clone()
}

/// Human-readable cause of an unrepairable race.
pub fn unrepairable_reason(trace: &RaceTrace) -> String {
    if trace.first.loc.line == trace.second.loc.line {
        if trace.first.kind == AccessKind::Write && trace.second.kind == AccessKind::Write {
            "write-write same line".to_string()
        } else {
            "read-write same line".to_string()
        }
    } else {
        format!(
            "no disabled placement between lines {} and {}",
            trace.first.loc.line, trace.second.loc.line
        )
    }
}

pub fn cannot_repair_reason(reason: &CannotRepairReason) -> String {
    match reason {
        CannotRepairReason::EmptyClause { trace } => unrepairable_reason(trace),
        CannotRepairReason::NonRace { message } => message.clone(),
    }
}

/// The JSON summary for any outcome. Successful repairs serialize the full
/// [`RepairSummary`]; failures carry their status and reason.
pub fn emit_summary(program_name: &str, strategy: Strategy, outcome: &RepairOutcome) -> Value {
    match outcome {
        RepairOutcome::Repaired(r) => serde_json::to_value(RepairSummary {
            program_name: program_name.to_string(),
            strategy: strategy.to_string(),
            status: "repaired".to_string(),
            iterations: r.iterations,
            edits: r.candidate.edits.clone(),
            optimal: r.optimal,
            enabled_count: r.sol.count_enabled(),
        })
        .expect("summary serializes"),
        RepairOutcome::CannotRepair(c) => json!({
            "programName": program_name,
            "strategy": strategy.to_string(),
            "status": "cannot_repair",
            "reason": cannot_repair_reason(&c.reason),
            "iterations": c.iterations,
        }),
        RepairOutcome::Unsupported { message } => json!({
            "programName": program_name,
            "strategy": strategy.to_string(),
            "status": "unsupported",
            "reason": message,
        }),
        RepairOutcome::Timeout { iterations } => json!({
            "programName": program_name,
            "strategy": strategy.to_string(),
            "status": "timeout",
            "iterations": iterations,
        }),
    }
}

/// Replays an edit list against the original source. Inserted lines copy the
/// indentation of the statement they attach to; removals of an ordered
/// region drop its opening line and the first bare `}` after it.
pub fn apply_edits(source: &str, edits: &[Edit]) -> String {
    let lines = source_lines(source);
    let line_at = |line: u32| lines[(line - 1) as usize].as_str();

    let mut skip: BTreeSet<u32> = BTreeSet::new();
    let mut before: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    let mut after: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    let mut headers: BTreeMap<u32, String> = BTreeMap::new();

    for edit in edits {
        match &edit.action {
            EditAction::InsertBarrier => {
                let indent = indent_of(line_at(edit.loc.line));
                before
                    .entry(edit.loc.line)
                    .or_default()
                    .push(format!("{indent}barrier;"));
            }
            EditAction::AddOrderedClause => {
                headers.insert(edit.loc.line, with_ordered_clause(line_at(edit.loc.line)));
            }
            EditAction::WrapOrdered { start, end } => {
                let indent = indent_of(line_at(start.line)).to_string();
                before
                    .entry(start.line)
                    .or_default()
                    .push(format!("{indent}ordered {{"));
                after
                    .entry(end.line)
                    .or_default()
                    .push(format!("{indent}}}"));
            }
            EditAction::RemoveBarrier => {
                skip.insert(edit.loc.line);
            }
            EditAction::RemoveOrderedRegion => {
                skip.insert(edit.loc.line);
                let close = (edit.loc.line + 1..=lines.len() as u32)
                    .find(|&l| line_at(l).trim() == "}")
                    .expect("an ordered region has a closing line");
                skip.insert(close);
            }
        }
    }

    let mut out: Vec<String> = Vec::new();
    for (idx0, raw) in lines.iter().enumerate() {
        let line = (idx0 + 1) as u32;
        if let Some(ins) = before.get(&line) {
            out.extend(ins.iter().cloned());
        }
        if !skip.contains(&line) {
            match headers.get(&line) {
                Some(h) => out.push(h.clone()),
                None => out.push(raw.clone()),
            }
        }
        if let Some(ins) = after.get(&line) {
            out.extend(ins.iter().cloned());
        }
    }
    out.join("\n") + "\n"
}
