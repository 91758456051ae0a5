//! Batch driver: repair a list of files, print one verdict line each, write
//! artifacts next to the inputs.
//!
//! Exit codes: 0 when every input lands in a good category (repaired, safe,
//! or changes recommended), 1 when any input is unrepairable, unsupported,
//! or timed out, 2 when any input could not be read or parsed.

use crate::emit::{cannot_repair_reason, emit_program, emit_summary};
use crate::engine::{repair, Budget, RepairOutcome, Strategy};
use crate::instrument::instrument;
use crate::parse::{parse, ParseError};
use serde_json::json;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

impl clap::ValueEnum for Strategy {
    fn value_variants<'a>() -> &'a [Self] {
        &[Strategy::Mhs, Strategy::MaxSat]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Strategy::Mhs => "mhs",
            Strategy::MaxSat => "maxsat",
        }))
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub strategy: Strategy,
    pub timeout_secs: u64,
    pub verbose: bool,
    /// Where to write the category report (or the comparison CSV).
    pub report: Option<PathBuf>,
    pub compare_solvers: bool,
    pub dump_clauses: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            strategy: Strategy::Mhs,
            timeout_secs: 300,
            verbose: false,
            report: None,
            compare_solvers: false,
            dump_clauses: false,
        }
    }
}

/// Verdict category of one input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Category {
    /// Safe after learning; insertions may come with removals of misplaced
    /// constructs, the count covers both.
    Repaired(usize),
    /// Safe as written, nothing to change.
    SafeNoChanges,
    /// Safe as written, but this many constructs are unnecessary.
    ChangesRecommended(usize),
    CannotRepair,
    Unsupported,
    Timeout,
    /// I/O or syntax failure; no verdict.
    Error,
}

impl Category {
    fn key(&self) -> &'static str {
        match self {
            Category::Repaired(_) => "repaired",
            Category::SafeNoChanges => "safeNoChanges",
            Category::ChangesRecommended(_) => "changesRecommended",
            Category::CannotRepair => "cannotRepair",
            Category::Unsupported => "unsupported",
            Category::Timeout => "timeout",
            Category::Error => "error",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Repaired(n) => write!(f, "REPAIRED {n}-edits"),
            Category::SafeNoChanges => f.write_str("SAFE-no-changes"),
            Category::ChangesRecommended(n) => write!(f, "CHANGES-RECOMMENDED {n}-removals"),
            Category::CannotRepair => f.write_str("CANNOT-REPAIR"),
            Category::Unsupported => f.write_str("UNSUPPORTED"),
            Category::Timeout => f.write_str("TIMEOUT"),
            Category::Error => f.write_str("ERROR"),
        }
    }
}

/// `foo/bar.mmp` owns artifacts `foo/bar.llor.json` and
/// `foo/bar.repaired.mmp`.
fn artifact_path(input: &Path, suffix: &str) -> PathBuf {
    let s = input.to_string_lossy();
    let stem = s.strip_suffix(".mmp").unwrap_or(&s);
    PathBuf::from(format!("{stem}{suffix}"))
}

fn program_name(input: &Path) -> String {
    input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "main".to_string())
}

/// Verdict category of a finished repair, from the two facts the caller can
/// see: how many iterations the loop took and what edits came out.
fn success_category(iterations: u64, edits_total: usize, removals: usize) -> Category {
    if iterations == 1 {
        if edits_total == 0 {
            Category::SafeNoChanges
        } else {
            Category::ChangesRecommended(removals)
        }
    } else {
        Category::Repaired(edits_total)
    }
}

/// Verdict category for any repair outcome, as the verdict line prints it.
pub fn outcome_category(outcome: &RepairOutcome) -> Category {
    match outcome {
        RepairOutcome::Repaired(r) => {
            let removals = r.candidate.edits.iter().filter(|e| e.is_removal()).count();
            success_category(r.iterations, r.candidate.edits.len(), removals)
        }
        RepairOutcome::CannotRepair(_) => Category::CannotRepair,
        RepairOutcome::Unsupported { .. } => Category::Unsupported,
        RepairOutcome::Timeout { .. } => Category::Timeout,
    }
}

struct FileResult {
    category: Category,
    /// Edit count for the report; zero for failures.
    edits: usize,
}

fn process_file(
    cfg: &RunConfig,
    path: &Path,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> FileResult {
    let shown = path.display();
    let source = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "{shown}: error: {e}");
            return FileResult {
                category: Category::Error,
                edits: 0,
            };
        }
    };
    let name = program_name(path);

    let mut program = match parse(&source) {
        Ok(p) => p,
        Err(ParseError::Unsupported { loc, construct }) => {
            let _ = writeln!(
                stdout,
                "{shown}: UNSUPPORTED ({construct} at line {})",
                loc.line
            );
            let summary = json!({
                "programName": name,
                "strategy": cfg.strategy.to_string(),
                "status": "unsupported",
                "reason": format!("{construct} at {loc}"),
            });
            write_artifact(
                &artifact_path(path, ".llor.json"),
                &summary.to_string(),
                stderr,
            );
            return FileResult {
                category: Category::Unsupported,
                edits: 0,
            };
        }
        Err(e) => {
            let _ = writeln!(stderr, "{shown}: error: {e}");
            return FileResult {
                category: Category::Error,
                edits: 0,
            };
        }
    };
    program.name = name.clone();

    let ip = instrument(&program);
    let budget = Budget::with_timeout_secs(cfg.timeout_secs);
    let outcome = repair(&ip, cfg.strategy, &budget);

    if cfg.verbose {
        let log = match &outcome {
            RepairOutcome::Repaired(r) => Some((&r.trace_log, r.iterations)),
            RepairOutcome::CannotRepair(c) => Some((&c.trace_log, c.iterations)),
            _ => None,
        };
        if let Some((traces, iterations)) = log {
            for (k, trace) in traces.iter().enumerate() {
                let _ = writeln!(stderr, "# {shown} iteration {}: {trace}", k + 1);
            }
            let _ = writeln!(stderr, "# {shown} finished after {iterations} iterations");
        }
    }

    if cfg.dump_clauses {
        let phi = match &outcome {
            RepairOutcome::Repaired(r) => Some(&r.phi),
            RepairOutcome::CannotRepair(c) => Some(&c.phi),
            _ => None,
        };
        if let Some(phi) = phi {
            let _ = writeln!(stdout, "c {shown}");
            let _ = write!(stdout, "{}", phi.to_dimacs());
        }
    }

    let summary = emit_summary(&name, cfg.strategy, &outcome);
    write_artifact(
        &artifact_path(path, ".llor.json"),
        &summary.to_string(),
        stderr,
    );

    match &outcome {
        RepairOutcome::Repaired(r) => {
            write_artifact(
                &artifact_path(path, ".repaired.mmp"),
                &emit_program(&r.candidate),
                stderr,
            );
            let removals = r.candidate.edits.iter().filter(|e| e.is_removal()).count();
            let category = success_category(r.iterations, r.candidate.edits.len(), removals);
            let _ = writeln!(stdout, "{shown}: {category}");
            FileResult {
                category,
                edits: r.candidate.edits.len(),
            }
        }
        RepairOutcome::CannotRepair(c) => {
            let _ = writeln!(
                stdout,
                "{shown}: CANNOT-REPAIR ({})",
                cannot_repair_reason(&c.reason)
            );
            FileResult {
                category: Category::CannotRepair,
                edits: 0,
            }
        }
        RepairOutcome::Unsupported { message } => {
            let _ = writeln!(stdout, "{shown}: UNSUPPORTED ({message})");
            FileResult {
                category: Category::Unsupported,
                edits: 0,
            }
        }
        RepairOutcome::Timeout { .. } => {
            let _ = writeln!(stdout, "{shown}: TIMEOUT");
            FileResult {
                category: Category::Timeout,
                edits: 0,
            }
        }
    }
}

fn write_artifact(path: &Path, content: &str, stderr: &mut dyn Write) {
    if let Err(e) = fs::write(path, content) {
        let _ = writeln!(stderr, "{}: error: {e}", path.display());
    }
}

/// Times both strategies on every input and returns a CSV. A row appears
/// only for inputs both strategies repair; the header always does.
pub fn compare_solvers(inputs: &[PathBuf], timeout_secs: u64) -> String {
    let mut csv =
        String::from("input,mhs_ms,maxsat_ms,mhs_iters,maxsat_iters,mhs_enabled,maxsat_enabled\n");
    let budget = Budget::with_timeout_secs(timeout_secs);
    for path in inputs {
        let Ok(source) = fs::read_to_string(path) else {
            continue;
        };
        let Ok(mut program) = parse(&source) else {
            continue;
        };
        program.name = program_name(path);
        let ip = instrument(&program);

        let mut cells = Vec::new();
        for strategy in Strategy::all() {
            let begin = Instant::now();
            let outcome = repair(&ip, strategy, &budget);
            let ms = begin.elapsed().as_millis();
            match outcome {
                RepairOutcome::Repaired(r) => cells.push((ms, r.iterations, r.sol.count_enabled())),
                _ => break,
            }
        }
        if let [mhs, maxsat] = cells[..] {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                path.display(),
                mhs.0,
                maxsat.0,
                mhs.1,
                maxsat.1,
                mhs.2,
                maxsat.2
            ));
        }
    }
    csv
}

/// Processes every input in order. Returns the process exit code.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    if cfg.compare_solvers {
        let csv = compare_solvers(&cfg.inputs, cfg.timeout_secs);
        match &cfg.report {
            Some(path) => write_artifact(path, &csv, stderr),
            None => {
                let _ = write!(stdout, "{csv}");
            }
        }
        return 0;
    }

    let mut results: Vec<(PathBuf, FileResult)> = Vec::new();
    for path in &cfg.inputs {
        let result = process_file(cfg, path, stdout, stderr);
        results.push((path.clone(), result));
    }

    if let Some(report_path) = &cfg.report {
        let keys = [
            "repaired",
            "safeNoChanges",
            "changesRecommended",
            "cannotRepair",
            "unsupported",
            "timeout",
            "error",
        ];
        let mut counts = serde_json::Map::new();
        for key in keys {
            let n = results
                .iter()
                .filter(|(_, r)| r.category.key() == key)
                .count();
            counts.insert(key.to_string(), json!(n));
        }
        let files: Vec<_> = results
            .iter()
            .map(|(path, r)| {
                json!({
                    "input": path.display().to_string(),
                    "category": r.category.to_string(),
                    "edits": r.edits,
                })
            })
            .collect();
        let report = json!({
            "strategy": cfg.strategy.to_string(),
            "counts": counts,
            "files": files,
        });
        write_artifact(
            report_path,
            &serde_json::to_string_pretty(&report).unwrap(),
            stderr,
        );
    }

    let any_error = results.iter().any(|(_, r)| r.category == Category::Error);
    let any_bad = results.iter().any(|(_, r)| {
        matches!(
            r.category,
            Category::CannotRepair | Category::Unsupported | Category::Timeout
        )
    });
    if any_error {
        2
    } else if any_bad {
        1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_lines_render_the_contract_labels() {
        assert_eq!(Category::Repaired(2).to_string(), "REPAIRED 2-edits");
        assert_eq!(Category::SafeNoChanges.to_string(), "SAFE-no-changes");
        assert_eq!(
            Category::ChangesRecommended(1).to_string(),
            "CHANGES-RECOMMENDED 1-removals"
        );
        assert_eq!(Category::Timeout.to_string(), "TIMEOUT");
    }

    #[test]
    fn one_iteration_splits_on_whether_edits_exist() {
        assert_eq!(success_category(1, 0, 0), Category::SafeNoChanges);
        assert_eq!(success_category(1, 2, 2), Category::ChangesRecommended(2));
        assert_eq!(success_category(2, 1, 0), Category::Repaired(1));
        // Re-enabled existing synchronization: more than one iteration but
        // zero edits is still a repair.
        assert_eq!(success_category(2, 0, 0), Category::Repaired(0));
    }

    #[test]
    fn artifact_paths_replace_the_extension() {
        assert_eq!(
            artifact_path(Path::new("corpus/race.mmp"), ".llor.json"),
            PathBuf::from("corpus/race.llor.json")
        );
        assert_eq!(
            artifact_path(Path::new("noext"), ".repaired.mmp"),
            PathBuf::from("noext.repaired.mmp")
        );
    }

    #[test]
    fn comparison_csv_always_has_the_header() {
        let csv = compare_solvers(&[], 300);
        assert_eq!(
            csv,
            "input,mhs_ms,maxsat_ms,mhs_iters,maxsat_iters,mhs_enabled,maxsat_enabled\n"
        );
    }
}
