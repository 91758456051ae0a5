//! Python bindings for the barrier-repair toolchain. The module mirrors the
//! command-line surface: parse a program, verify it as written, run the
//! repair loop, cross-check with the interleaving oracle, and call the two
//! hitting-set solvers directly.
//!
//! Results come back as plain dicts and lists so callers need no wrapper
//! types; locations are `{"line", "col"}` pairs, 1-based like the CLI.

use llor::ast::{Program, RegionKind, SourceLoc};
use llor::clause::{solve_maxsat as rs_solve_maxsat, solve_mhs as rs_solve_mhs, ClauseSet};
use llor::cli::outcome_category;
use llor::emit::emit_summary;
use llor::engine::{repair as rs_repair, Budget, RepairOutcome, Strategy};
use llor::instrument::{instrument, Assignment};
use llor::oracle::{oracle_race_check, OracleError, OraclePair};
use llor::parse::parse as rs_parse;
use llor::verify::{collect_races, AccessKind, RaceTrace};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::{json, Value};
use std::time::Duration;

fn json_to_py(py: Python<'_>, value: &Value) -> PyResult<Py<PyAny>> {
    match value {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else if let Some(u) = n.as_u64() {
                u.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        Value::String(s) => s.into_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn parse_named(source: &str, name: &str) -> PyResult<Program> {
    let mut program = rs_parse(source).map_err(|e| PyValueError::new_err(e.to_string()))?;
    program.name = name.to_string();
    Ok(program)
}

fn strategy_named(name: &str) -> PyResult<Strategy> {
    match name {
        "mhs" => Ok(Strategy::Mhs),
        "maxsat" => Ok(Strategy::MaxSat),
        other => Err(PyValueError::new_err(format!(
            "unknown strategy `{other}`, expected `mhs` or `maxsat`"
        ))),
    }
}

fn access_json(loc: SourceLoc, kind: AccessKind) -> Value {
    json!({"line": loc.line, "col": loc.col, "kind": kind.to_string()})
}

fn trace_json(trace: &RaceTrace) -> Value {
    json!({
        "array": trace.array,
        "first": access_json(trace.first.loc, trace.first.kind),
        "second": access_json(trace.second.loc, trace.second.kind),
    })
}

fn pair_json(pair: &OraclePair) -> Value {
    json!({
        "array": pair.array,
        "first": access_json(pair.first.0, pair.first.1),
        "second": access_json(pair.second.0, pair.second.1),
    })
}

/// Every placement variable standing in for a construct the programmer
/// wrote, enabled; everything else disabled. This reproduces the program
/// exactly as authored.
fn as_written(ip: &llor::instrument::InstrumentedProgram) -> Assignment {
    let enabled: Vec<u32> = ip
        .vars
        .iter()
        .filter(|v| v.from_existing)
        .map(|v| v.id)
        .collect();
    Assignment::from_enabled(ip.vars.len(), &enabled)
}

fn clause_set_of(var_count: u32, clauses: Vec<Vec<u32>>) -> PyResult<ClauseSet> {
    let mut phi = ClauseSet::new(var_count);
    for clause in clauses {
        for &id in &clause {
            if id >= var_count {
                return Err(PyValueError::new_err(format!(
                    "variable {id} is out of range for {var_count} variables"
                )));
            }
        }
        // A repeated clause changes nothing; keep set semantics.
        let _ = phi.add_clause(clause.into_iter().collect());
    }
    Ok(phi)
}

/// Parse a program and describe its arrays and regions.
///
/// Raises `ValueError` on syntax errors or unsupported constructs.
#[pyfunction]
#[pyo3(signature = (source, name = "program"))]
fn parse(py: Python<'_>, source: &str, name: &str) -> PyResult<Py<PyAny>> {
    let program = parse_named(source, name)?;
    let arrays: Vec<Value> = program
        .decls
        .iter()
        .map(|d| json!({"name": d.name, "len": d.len, "line": d.loc.line}))
        .collect();
    let regions: Vec<Value> = program
        .regions
        .iter()
        .map(|r| {
            json!({
                "kind": match r.kind {
                    RegionKind::Parallel => "parallel",
                    RegionKind::ParallelFor => "parallel_for",
                },
                "threads": r.count,
                "ordered": r.has_ordered_clause,
                "headerLine": r.header_loc.line,
                "footerLine": r.footer_line,
                "statements": r.body.len(),
            })
        })
        .collect();
    let info = json!({
        "name": program.name,
        "arrays": arrays,
        "regions": regions,
        "source": program.to_source(),
    });
    json_to_py(py, &info)
}

/// Statically verify a program as written and list every racing pair.
#[pyfunction]
#[pyo3(signature = (source, name = "program"))]
fn check(py: Python<'_>, source: &str, name: &str) -> PyResult<Py<PyAny>> {
    let ip = instrument(&parse_named(source, name)?);
    let races: Vec<Value> = collect_races(&ip, &as_written(&ip))
        .iter()
        .map(trace_json)
        .collect();
    json_to_py(py, &json!({"safe": races.is_empty(), "races": races}))
}

/// Run the repair loop and return the summary the CLI would write, plus the
/// verdict category, the enabled placement ids, and (when repaired) the
/// repaired source text.
#[pyfunction]
#[pyo3(signature = (source, strategy = "mhs", timeout_secs = 300, max_iterations = 1000, name = "program"))]
fn repair(
    py: Python<'_>,
    source: &str,
    strategy: &str,
    timeout_secs: u64,
    max_iterations: u64,
    name: &str,
) -> PyResult<Py<PyAny>> {
    let strategy = strategy_named(strategy)?;
    let ip = instrument(&parse_named(source, name)?);
    let budget = Budget {
        max_iterations,
        max_time: Duration::from_secs(timeout_secs),
    };
    let outcome = rs_repair(&ip, strategy, &budget);

    let mut summary = emit_summary(name, strategy, &outcome);
    let extra = summary.as_object_mut().expect("summaries are objects");
    extra.insert(
        "category".to_string(),
        Value::String(outcome_category(&outcome).to_string()),
    );
    match &outcome {
        RepairOutcome::Repaired(r) => {
            extra.insert(
                "repairedSource".to_string(),
                Value::String(r.candidate.source.clone()),
            );
            extra.insert("enabledIds".to_string(), json!(r.sol.enabled_ids()));
            extra.insert(
                "races".to_string(),
                Value::Array(r.trace_log.iter().map(trace_json).collect()),
            );
        }
        RepairOutcome::CannotRepair(c) => {
            extra.insert(
                "races".to_string(),
                Value::Array(c.trace_log.iter().map(trace_json).collect()),
            );
        }
        _ => {}
    }
    json_to_py(py, &summary)
}

/// Exhaustively enumerate interleavings of the program as written and list
/// every conflicting pair that can be in flight at once.
///
/// Raises `ValueError` when the program is outside the oracle's scope and
/// `RuntimeError` when the state budget runs out.
#[pyfunction]
#[pyo3(signature = (source, max_threads = 3, name = "program"))]
fn oracle_check(py: Python<'_>, source: &str, max_threads: u32, name: &str) -> PyResult<Py<PyAny>> {
    let ip = instrument(&parse_named(source, name)?);
    let races = oracle_race_check(&ip, &as_written(&ip), max_threads).map_err(|e| match e {
        OracleError::Scope(_) => PyValueError::new_err(e.to_string()),
        OracleError::ResourceLimit { .. } => PyRuntimeError::new_err(e.to_string()),
    })?;
    let races: Vec<Value> = races.iter().map(pair_json).collect();
    json_to_py(py, &Value::Array(races))
}

/// Greedy hitting set over positive clauses: ids of the enabled variables,
/// or `None` when an empty clause makes the set unsatisfiable.
#[pyfunction]
fn solve_mhs(var_count: u32, clauses: Vec<Vec<u32>>) -> PyResult<Option<Vec<u32>>> {
    Ok(rs_solve_mhs(&clause_set_of(var_count, clauses)?).map(|a| a.enabled_ids()))
}

/// Minimum-cardinality hitting set over positive clauses: ids of the enabled
/// variables, or `None` when an empty clause makes the set unsatisfiable.
#[pyfunction]
fn solve_maxsat(var_count: u32, clauses: Vec<Vec<u32>>) -> PyResult<Option<Vec<u32>>> {
    Ok(rs_solve_maxsat(&clause_set_of(var_count, clauses)?).map(|a| a.enabled_ids()))
}

#[pymodule]
pub fn llor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(repair, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add_function(wrap_pyfunction!(solve_mhs, m)?)?;
    m.add_function(wrap_pyfunction!(solve_maxsat, m)?)?;
    Ok(())
}
