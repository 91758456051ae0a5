//! The repair loop: verify a candidate, learn a clause from its race, solve
//! for the next candidate.
//!
//! Every race trace names two access lines; any disabled placement variable
//! strictly between them (in the same region) could have separated the pair,
//! so those variables form one positive clause. The clause set only ever
//! grows, each solution must hit every clause, and enabling more placements
//! never unsynchronizes anything, so the loop either reaches a safe
//! assignment or learns the empty clause and concludes the program cannot be
//! repaired by these placements.

use crate::candidate::{generate_repair_candidate, Candidate};
use crate::clause::{solve_maxsat, solve_mhs, Clause, ClauseSet};
use crate::instrument::{Assignment, InstrumentedProgram};
use crate::verify::{verify, RaceTrace, VerificationResult};
use std::fmt;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Greedy hitting set: fast, not always minimum.
    Mhs,
    /// Exact minimum-cardinality hitting set.
    MaxSat,
}

impl Strategy {
    pub fn all() -> [Strategy; 2] {
        [Strategy::Mhs, Strategy::MaxSat]
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Mhs => "mhs",
            Strategy::MaxSat => "maxsat",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_iterations: u64,
    pub max_time: Duration,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_iterations: 1000,
            max_time: Duration::from_secs(300),
        }
    }
}

impl Budget {
    pub fn with_timeout_secs(secs: u64) -> Self {
        Budget {
            max_time: Duration::from_secs(secs),
            ..Budget::default()
        }
    }
}

#[derive(Debug)]
pub enum RepairOutcome {
    Repaired(Repaired),
    CannotRepair(CannotRepair),
    Unsupported { message: String },
    Timeout { iterations: u64 },
}

#[derive(Debug)]
pub struct Repaired {
    pub candidate: Candidate,
    pub sol: Assignment,
    pub phi: ClauseSet,
    pub iterations: u64,
    /// Whether `sol` enables as few placements as any solution of `phi`.
    /// Always true for the exact strategy.
    pub optimal: bool,
    /// The fewest enabled placements any solution of `phi` needs.
    pub min_enabled: u32,
    pub trace_log: Vec<RaceTrace>,
}

#[derive(Debug)]
pub struct CannotRepair {
    pub reason: CannotRepairReason,
    pub iterations: u64,
    pub phi: ClauseSet,
    pub trace_log: Vec<RaceTrace>,
}

#[derive(Debug)]
pub enum CannotRepairReason {
    /// Some race has no disabled placement between its accesses; the learned
    /// empty clause makes the placement constraints unsatisfiable.
    EmptyClause { trace: RaceTrace },
    /// The verifier failed with something other than a race.
    NonRace { message: String },
}

/// The positive clause a race trace teaches: every still-disabled placement
/// that falls strictly after the first access and at or before the second,
/// within the race's region. Enabling any of them could separate the pair.
pub fn generate_clause(ip: &InstrumentedProgram, a: &Assignment, trace: &RaceTrace) -> Clause {
    let region = ip.base.regions.iter().position(|r| {
        r.header_loc.line < trace.first.loc.line && trace.first.loc.line < r.footer_line
    });
    ip.vars
        .iter()
        .filter(|v| {
            !a.get(v.id)
                && region == Some(ip.var_region[v.id as usize])
                && trace.first.loc.line < v.loc.line
                && v.loc.line <= trace.second.loc.line
        })
        .map(|v| v.id)
        .collect()
}

fn solve(strategy: Strategy, phi: &ClauseSet) -> Option<Assignment> {
    match strategy {
        Strategy::Mhs => solve_mhs(phi),
        Strategy::MaxSat => solve_maxsat(phi),
    }
}

/// Runs the learn-and-solve loop until the verifier accepts a candidate, the
/// clause set becomes unsatisfiable, or the budget runs out.
pub fn repair(ip: &InstrumentedProgram, strategy: Strategy, budget: &Budget) -> RepairOutcome {
    let start = Instant::now();
    let mut phi = ClauseSet::new(ip.vars.len() as u32);
    let mut trace_log: Vec<RaceTrace> = Vec::new();
    let mut iterations: u64 = 0;

    loop {
        if iterations >= budget.max_iterations || start.elapsed() > budget.max_time {
            return RepairOutcome::Timeout { iterations };
        }
        iterations += 1;

        let sol = match solve(strategy, &phi) {
            Some(sol) => sol,
            None => {
                let trace = trace_log
                    .last()
                    .cloned()
                    .expect("an unsatisfiable clause set comes from a learned empty clause");
                return RepairOutcome::CannotRepair(CannotRepair {
                    reason: CannotRepairReason::EmptyClause { trace },
                    iterations,
                    phi,
                    trace_log,
                });
            }
        };

        match verify(ip, &sol) {
            VerificationResult::Safe => {
                let candidate = generate_repair_candidate(ip, &sol);
                let (optimal, min_enabled) = match strategy {
                    Strategy::MaxSat => (true, sol.count_enabled()),
                    Strategy::Mhs => {
                        let best = solve_maxsat(&phi)
                            .expect("a clause set the current solution satisfies is satisfiable");
                        let min = best.count_enabled();
                        (sol.count_enabled() == min, min)
                    }
                };
                return RepairOutcome::Repaired(Repaired {
                    candidate,
                    sol,
                    phi,
                    iterations,
                    optimal,
                    min_enabled,
                    trace_log,
                });
            }
            VerificationResult::Race(trace) => {
                let clause = generate_clause(ip, &sol, &trace);
                trace_log.push(trace);
                if let Err(e) = phi.add_clause(clause) {
                    return RepairOutcome::CannotRepair(CannotRepair {
                        reason: CannotRepairReason::NonRace {
                            message: format!("solver state went inconsistent: {e}"),
                        },
                        iterations,
                        phi,
                        trace_log,
                    });
                }
            }
            VerificationResult::Other(message) => {
                return RepairOutcome::CannotRepair(CannotRepair {
                    reason: CannotRepairReason::NonRace { message },
                    iterations,
                    phi,
                    trace_log,
                });
            }
            VerificationResult::Unsupported(message) => {
                return RepairOutcome::Unsupported { message };
            }
        }
    }
}

/// The same search run for its other reading: a program whose existing
/// synchronization is partly or wholly unnecessary converges on a solution
/// that leaves the extra constructs disabled, reporting them as removals.
pub fn remove_unnecessary(
    ip: &InstrumentedProgram,
    strategy: Strategy,
    budget: &Budget,
) -> RepairOutcome {
    repair(ip, strategy, budget)
}
