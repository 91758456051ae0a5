//! Automated data-race repair for MiniMP programs.
//!
//! The pipeline: [`parse`](parse::parse) source text, [`instrument`](instrument::instrument)
//! it into a set of Boolean synchronization-placement variables, then let
//! [`repair`](engine::repair) search for the cheapest enabling that the
//! verifier accepts. Each failed candidate contributes one positive clause
//! naming the placements that could have separated the reported race, so the
//! clause set steers the next candidate away from every race seen so far.
//! [`emit`](emit) renders the repaired program and a machine-readable
//! summary; [`cli`](cli) wraps the pipeline for batch use.

pub mod ast;
pub mod candidate;
pub mod clause;
pub mod cli;
pub mod emit;
pub mod engine;
pub mod instrument;
pub mod oracle;
pub mod parse;
pub mod verify;

pub use ast::{Program, SourceLoc};
pub use candidate::{Candidate, Edit, EditAction};
pub use clause::{check_optimal, solve_maxsat, solve_mhs, Clause, ClauseSet};
pub use engine::{remove_unnecessary, repair, Budget, RepairOutcome, Strategy};
pub use instrument::{default_assignment, instrument, Assignment, InstrumentedProgram};
pub use parse::{parse, ParseError};
pub use verify::{verify, RaceTrace, VerificationResult};
