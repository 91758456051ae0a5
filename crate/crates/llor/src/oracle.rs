//! Exhaustive interleaving oracle, the ground truth the static checker is
//! tested against.
//!
//! Each region is explored as a transition system over per-thread program
//! counters plus the ordered-region turn token. Barriers advance all threads
//! in one rendezvous step, region entry is gated on the token matching the
//! thread id, and region exit passes the token on. Two conflicting accesses
//! race exactly when some reachable state has both of them enabled at once.
//! The oracle shares no conflict or phase reasoning with `verify`; it only
//! reuses the rendering of an assignment into barrier and region positions.

use crate::ast::{IndexExpr, RegionKind, SourceLoc, StmtOp};
use crate::candidate::{sync_plan, RegionPlan};
use crate::instrument::{Assignment, InstrumentedProgram};
use crate::verify::AccessKind;
use std::collections::{BTreeSet, HashSet};
use thiserror::Error;

/// Reachable-state budget per region; exploration aborts beyond it.
pub const DEFAULT_STATE_LIMIT: usize = 1 << 20;
/// Largest thread count the oracle will take on.
pub const MAX_ORACLE_THREADS: u32 = 4;
/// Largest declared array length the oracle will take on.
pub const MAX_ORACLE_ARRAY_LEN: u64 = 16;

/// One co-enabled conflicting pair, normalized so `first` is the side that
/// comes earlier in program order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OraclePair {
    pub first: (SourceLoc, AccessKind),
    pub second: (SourceLoc, AccessKind),
    pub array: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("outside oracle scope: {0}")]
    Scope(String),
    #[error("state budget of {limit} reachable states exhausted")]
    ResourceLimit { limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ev {
    Access {
        pos: usize,
        loc: SourceLoc,
        kind: AccessKind,
        array: String,
        index: IndexExpr,
    },
    Barrier,
    Enter,
    Exit,
}

/// The event sequence one thread of the region executes. All threads run the
/// same sequence; only subscript evaluation differs.
fn thread_events(ip: &InstrumentedProgram, region_idx: usize, plan: &RegionPlan) -> Vec<Ev> {
    let region = &ip.base.regions[region_idx];
    let mut evs: Vec<Ev> = Vec::new();
    let push_accesses = |evs: &mut Vec<Ev>, loc: SourceLoc, op: &StmtOp| {
        let push = |evs: &mut Vec<Ev>, kind, array: &String, index: IndexExpr| {
            evs.push(Ev::Access {
                pos: evs.len(),
                loc,
                kind,
                array: array.clone(),
                index,
            });
        };
        match op {
            StmtOp::Read { array, index, .. } => push(evs, AccessKind::Read, array, *index),
            StmtOp::Write { array, index, .. } => push(evs, AccessKind::Write, array, *index),
            StmtOp::ReadWrite {
                array,
                read_index,
                write_index,
            } => {
                push(evs, AccessKind::Read, array, *read_index);
                push(evs, AccessKind::Write, array, *write_index);
            }
            _ => {}
        }
    };

    match plan {
        RegionPlan::Parallel { boundaries } => {
            let mut next_boundary = 0;
            for stmt in &region.body {
                while next_boundary < boundaries.len() && boundaries[next_boundary] <= stmt.loc.line
                {
                    evs.push(Ev::Barrier);
                    next_boundary += 1;
                }
                push_accesses(&mut evs, stmt.loc, &stmt.op);
            }
            for _ in next_boundary..boundaries.len() {
                evs.push(Ev::Barrier);
            }
        }
        RegionPlan::ParallelFor { span } => {
            let enter_at = span.and_then(|s| {
                region
                    .body
                    .iter()
                    .position(|stmt| stmt.loc.line >= s.start_line)
            });
            let exit_at = span.and_then(|s| {
                region
                    .body
                    .iter()
                    .rposition(|stmt| stmt.loc.line <= s.end_line)
            });
            let mut entered = false;
            let mut exited = false;
            for (k, stmt) in region.body.iter().enumerate() {
                if enter_at == Some(k) {
                    evs.push(Ev::Enter);
                    entered = true;
                }
                push_accesses(&mut evs, stmt.loc, &stmt.op);
                if entered && exit_at == Some(k) {
                    evs.push(Ev::Exit);
                    exited = true;
                }
            }
            if span.is_some() {
                if !entered {
                    evs.push(Ev::Enter);
                    evs.push(Ev::Exit);
                } else if !exited {
                    evs.push(Ev::Exit);
                }
            }
        }
    }
    evs
}

fn cell(index: IndexExpr, thread: i64) -> i64 {
    match index {
        IndexExpr::Induction { offset } => thread + offset,
        IndexExpr::Const(k) => k,
    }
}

fn explore_region(
    events: &[Ev],
    threads: usize,
    serializes: bool,
    limit: usize,
    races: &mut BTreeSet<OraclePair>,
) -> Result<(), OracleError> {
    #[derive(Clone, PartialEq, Eq, Hash)]
    struct State {
        pcs: Vec<usize>,
        token: usize,
    }

    let initial = State {
        pcs: vec![0; threads],
        token: 0,
    };
    let mut visited: HashSet<State> = HashSet::new();
    let mut stack = vec![initial];

    while let Some(state) = stack.pop() {
        if !visited.insert(state.clone()) {
            continue;
        }
        if visited.len() > limit {
            return Err(OracleError::ResourceLimit { limit });
        }

        let current = |t: usize| events.get(state.pcs[t]);

        // Record every conflicting pair enabled together in this state.
        for t1 in 0..threads {
            for t2 in t1 + 1..threads {
                let (Some(e1), Some(e2)) = (current(t1), current(t2)) else {
                    continue;
                };
                let (
                    Ev::Access {
                        pos: p1,
                        loc: l1,
                        kind: k1,
                        array: a1,
                        index: i1,
                    },
                    Ev::Access {
                        pos: p2,
                        loc: l2,
                        kind: k2,
                        array: a2,
                        index: i2,
                    },
                ) = (e1, e2)
                else {
                    continue;
                };
                if a1 != a2
                    || (*k1 == AccessKind::Read && *k2 == AccessKind::Read)
                    || cell(*i1, t1 as i64) != cell(*i2, t2 as i64)
                {
                    continue;
                }
                let (first, second) = if p1 <= p2 {
                    ((*l1, *k1), (*l2, *k2))
                } else {
                    ((*l2, *k2), (*l1, *k1))
                };
                races.insert(OraclePair {
                    first,
                    second,
                    array: a1.clone(),
                });
            }
        }

        // Rendezvous: identical thread programs mean all blocked threads sit
        // at the same barrier, which releases everyone in one step.
        if (0..threads).all(|t| matches!(current(t), Some(Ev::Barrier))) {
            let mut next = state.clone();
            for pc in &mut next.pcs {
                *pc += 1;
            }
            stack.push(next);
        }

        for t in 0..threads {
            match current(t) {
                Some(Ev::Access { .. }) => {
                    let mut next = state.clone();
                    next.pcs[t] += 1;
                    stack.push(next);
                }
                Some(Ev::Enter) if serializes && state.token == t => {
                    let mut next = state.clone();
                    next.pcs[t] += 1;
                    stack.push(next);
                }
                Some(Ev::Exit) if serializes => {
                    let mut next = state.clone();
                    next.pcs[t] += 1;
                    next.token += 1;
                    stack.push(next);
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Enumerates every reachable interleaving of each region and returns the set
/// of conflicting access pairs that can be in flight simultaneously. Empty
/// means the assignment's synchronization makes the program race-free.
pub fn oracle_race_check(
    ip: &InstrumentedProgram,
    a: &Assignment,
    max_threads: u32,
) -> Result<BTreeSet<OraclePair>, OracleError> {
    oracle_race_check_with_limit(ip, a, max_threads, DEFAULT_STATE_LIMIT)
}

pub fn oracle_race_check_with_limit(
    ip: &InstrumentedProgram,
    a: &Assignment,
    max_threads: u32,
    state_limit: usize,
) -> Result<BTreeSet<OraclePair>, OracleError> {
    if max_threads > MAX_ORACLE_THREADS {
        return Err(OracleError::Scope(format!(
            "{max_threads} threads requested, oracle handles at most {MAX_ORACLE_THREADS}"
        )));
    }
    if a.len() != ip.vars.len() {
        return Err(OracleError::Scope(format!(
            "assignment has {} entries but the program has {} placement variables",
            a.len(),
            ip.vars.len()
        )));
    }
    for decl in &ip.base.decls {
        if decl.len > MAX_ORACLE_ARRAY_LEN {
            return Err(OracleError::Scope(format!(
                "array {} has length {}, oracle handles at most {MAX_ORACLE_ARRAY_LEN}",
                decl.name, decl.len
            )));
        }
    }

    let plan = sync_plan(ip, a);
    let mut races = BTreeSet::new();
    for (idx, region) in ip.base.regions.iter().enumerate() {
        if region.count > max_threads {
            return Err(OracleError::Scope(format!(
                "region at line {} declares {} threads, more than the {max_threads} allowed",
                region.header_loc.line, region.count
            )));
        }
        let events = thread_events(ip, idx, &plan.regions[idx]);
        let serializes = region.kind == RegionKind::ParallelFor;
        explore_region(
            &events,
            region.count as usize,
            serializes,
            state_limit,
            &mut races,
        )?;
    }
    Ok(races)
}
