//! Static race checker for an instrumented program under a given assignment.
//!
//! `parallel` regions follow phase logic: an enabled barrier at line `l`
//! splits execution so that accesses on lines `< l` can never overlap
//! accesses on lines `>= l`; two conflicting accesses race exactly when they
//! fall in the same phase. `parallel_for` loops follow ordering logic: the
//! (single, contiguous) ordered region serializes iterations, so a conflict
//! between an earlier-iteration access and a later-iteration access is
//! ordered exactly when the later one starts at or after the region. The
//! exhaustive interleaving oracle agrees with this checker on every program
//! it can afford to explore; the test suite leans on that agreement.

use crate::ast::{IndexExpr, SourceLoc, Stmt, StmtOp};
use crate::candidate::{sync_plan, RegionPlan};
use crate::instrument::{Assignment, InstrumentedProgram};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessKind {
    Read,
    Write,
}

impl fmt::Display for AccessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccessKind::Read => "read",
            AccessKind::Write => "write",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RaceAccess {
    pub loc: SourceLoc,
    pub kind: AccessKind,
}

/// A pair of conflicting, unordered accesses. `first` never comes after
/// `second` in program order; for a statement racing against another thread's
/// execution of the same line, the two sides coincide.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RaceTrace {
    pub first: RaceAccess,
    pub second: RaceAccess,
    pub array: String,
}

impl fmt::Display for RaceTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "race on {}: {} at {} / {} at {}",
            self.array, self.first.kind, self.first.loc, self.second.kind, self.second.loc
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerificationResult {
    Safe,
    Race(RaceTrace),
    /// The check itself failed (for example, an assignment of the wrong
    /// arity); distinct from both safety and a race.
    Other(String),
    Unsupported(String),
}

/// One shared-array access, flattened out of a statement. A read-write
/// statement contributes two events at the same location.
struct Event<'a> {
    seq: usize,
    loc: SourceLoc,
    kind: AccessKind,
    array: &'a str,
    index: IndexExpr,
}

fn push_event<'a>(
    events: &mut Vec<Event<'a>>,
    loc: SourceLoc,
    kind: AccessKind,
    array: &'a str,
    index: IndexExpr,
) {
    let seq = events.len();
    events.push(Event {
        seq,
        loc,
        kind,
        array,
        index,
    });
}

fn region_events(body: &[Stmt]) -> Vec<Event<'_>> {
    let mut events = Vec::new();
    for stmt in body {
        match &stmt.op {
            StmtOp::Read { array, index, .. } => {
                push_event(&mut events, stmt.loc, AccessKind::Read, array, *index)
            }
            StmtOp::Write { array, index, .. } => {
                push_event(&mut events, stmt.loc, AccessKind::Write, array, *index)
            }
            StmtOp::ReadWrite {
                array,
                read_index,
                write_index,
            } => {
                push_event(&mut events, stmt.loc, AccessKind::Read, array, *read_index);
                push_event(
                    &mut events,
                    stmt.loc,
                    AccessKind::Write,
                    array,
                    *write_index,
                );
            }
            _ => {}
        }
    }
    events
}

/// Can two threads with distinct ids in `0..n` evaluate these subscripts to
/// the same cell? Applied to an event paired with itself, this asks whether
/// two different threads can collide on one execution of the statement.
fn meets_across_threads(a: IndexExpr, b: IndexExpr, n: i64) -> bool {
    use IndexExpr::*;
    match (a, b) {
        (Induction { offset: c1 }, Induction { offset: c2 }) => {
            // Thread ids differ by at most n - 1.
            c1 != c2 && (c1 - c2).abs() < n
        }
        (Const(k1), Const(k2)) => k1 == k2,
        (Const(k), Induction { offset: c }) | (Induction { offset: c }, Const(k)) => {
            (0..n).contains(&(k - c))
        }
    }
}

/// In which temporal directions can two statement instances from different
/// loop iterations (of `t` total) touch the same cell? Returns
/// `(a_from_earlier_iteration, b_from_earlier_iteration)`.
fn loop_directions(a: IndexExpr, b: IndexExpr, t: i64) -> (bool, bool) {
    use IndexExpr::*;
    match (a, b) {
        (Induction { offset: c1 }, Induction { offset: c2 }) => {
            if c1 == c2 || (c1 - c2).abs() > t - 1 {
                (false, false)
            } else {
                // iter_a + c1 = iter_b + c2, so the larger offset belongs to
                // the earlier iteration.
                (c1 > c2, c1 < c2)
            }
        }
        (Const(k1), Const(k2)) => (k1 == k2, k1 == k2),
        (Const(k), Induction { offset: c }) => {
            let t0 = k - c;
            if (0..=t - 1).contains(&t0) {
                // The induction access runs only in iteration t0; the const
                // access runs in every iteration.
                (t0 >= 1, t0 <= t - 2)
            } else {
                (false, false)
            }
        }
        (Induction { .. }, Const(_)) => {
            let (b_earlier, a_earlier) = loop_directions(b, a, t);
            (a_earlier, b_earlier)
        }
    }
}

fn phase_of(boundaries: &[u32], line: u32) -> usize {
    boundaries.partition_point(|&b| b <= line)
}

/// All races in the program under assignment `a`, in source order.
pub fn collect_races(ip: &InstrumentedProgram, a: &Assignment) -> Vec<RaceTrace> {
    assert_eq!(a.len(), ip.vars.len(), "assignment arity mismatch");
    let plan = sync_plan(ip, a);
    let mut races = Vec::new();

    for (idx, region) in ip.base.regions.iter().enumerate() {
        let n = i64::from(region.count);
        if n < 2 {
            continue;
        }
        let events = region_events(&region.body);
        for e1 in &events {
            for e2 in events.iter().skip(e1.seq) {
                if e1.array != e2.array
                    || (e1.kind == AccessKind::Read && e2.kind == AccessKind::Read)
                {
                    continue;
                }
                let racy = match &plan.regions[idx] {
                    RegionPlan::Parallel { boundaries } => {
                        meets_across_threads(e1.index, e2.index, n)
                            && phase_of(boundaries, e1.loc.line)
                                == phase_of(boundaries, e2.loc.line)
                    }
                    RegionPlan::ParallelFor { span } => {
                        let (first_earlier, second_earlier) =
                            loop_directions(e1.index, e2.index, n);
                        let unordered = |later: &Event| match span {
                            // The region always reaches the loop's last shared
                            // access, so the earlier-iteration side can never
                            // trail it; only a later side that starts before
                            // the region escapes the ordering.
                            Some(span) => !span.contains(later.loc.line),
                            None => true,
                        };
                        (first_earlier && unordered(e2)) || (second_earlier && unordered(e1))
                    }
                };
                if racy {
                    races.push(RaceTrace {
                        first: RaceAccess {
                            loc: e1.loc,
                            kind: e1.kind,
                        },
                        second: RaceAccess {
                            loc: e2.loc,
                            kind: e2.kind,
                        },
                        array: e1.array.to_string(),
                    });
                }
            }
        }
    }
    races.sort();
    races
}

/// Checks the assignment and reports the first race in source order, if any.
pub fn verify(ip: &InstrumentedProgram, a: &Assignment) -> VerificationResult {
    if a.len() != ip.vars.len() {
        return VerificationResult::Other(format!(
            "assignment has {} entries but the program has {} placement variables",
            a.len(),
            ip.vars.len()
        ));
    }
    match collect_races(ip, a).into_iter().next() {
        None => VerificationResult::Safe,
        Some(trace) => VerificationResult::Race(trace),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::instrument;
    use crate::parse::parse;

    fn check(src: &str, enabled: &[u32]) -> VerificationResult {
        let ip = instrument(&parse(src).unwrap());
        let a = Assignment::from_enabled(ip.vars.len(), enabled);
        verify(&ip, &a)
    }

    fn race_lines(result: VerificationResult) -> (u32, u32) {
        match result {
            VerificationResult::Race(t) => (t.first.loc.line, t.second.loc.line),
            r => panic!("expected a race, got {r:?}"),
        }
    }

    const RACE: &str = "shared int data[3];\nparallel(2) {\n    compute;\n    temp = data[tid+1];\n\n    data[tid] = temp;\n}\n";

    #[test]
    fn adjacent_offsets_race_without_a_barrier() {
        let r = check(RACE, &[]);
        assert_eq!(race_lines(r.clone()), (4, 6));
        match r {
            VerificationResult::Race(t) => {
                assert_eq!(t.first.kind, AccessKind::Read);
                assert_eq!(t.second.kind, AccessKind::Write);
                assert_eq!(t.array, "data");
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn barrier_between_the_accesses_separates_them() {
        assert_eq!(check(RACE, &[1]), VerificationResult::Safe);
    }

    #[test]
    fn barrier_before_both_accesses_does_not_help() {
        assert_eq!(race_lines(check(RACE, &[0])), (4, 6));
    }

    #[test]
    fn single_thread_regions_cannot_race() {
        let src = "shared int d[3];\nparallel(1) {\n    d[0] = tid;\n    d[0] = tid;\n}\n";
        assert_eq!(check(src, &[]), VerificationResult::Safe);
    }

    #[test]
    fn constant_subscript_write_races_against_its_own_line() {
        let src = "shared int d[3];\nparallel(2) {\n    compute;\n    d[0] = tid;\n}\n";
        let r = check(src, &[]);
        assert_eq!(race_lines(r.clone()), (4, 4));
        match r {
            VerificationResult::Race(t) => {
                assert_eq!(t.first.kind, AccessKind::Write);
                assert_eq!(t.second.kind, AccessKind::Write);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn read_write_statement_races_with_itself_across_threads() {
        let src = "shared int a[4];\nparallel(2) {\n    a[tid] = a[tid+1];\n}\n";
        let r = check(src, &[]);
        assert_eq!(race_lines(r.clone()), (3, 3));
        match r {
            VerificationResult::Race(t) => {
                assert_eq!(t.first.kind, AccessKind::Read);
                assert_eq!(t.second.kind, AccessKind::Write);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn offsets_beyond_thread_count_never_meet() {
        let src = "shared int d[8];\nparallel(2) {\n    temp = d[tid+5];\n    d[tid] = temp;\n}\n";
        assert_eq!(check(src, &[]), VerificationResult::Safe);
    }

    #[test]
    fn loop_race_fixed_by_region_over_the_later_access() {
        let src = "shared int d[3];\nparallel_for(2) {\n    temp = d[i+1];\n    d[i] = temp;\n}\n";
        assert_eq!(race_lines(check(src, &[])), (3, 4));
        // Region from the write (line 4) through the last access (line 4):
        // the read of iteration t+1 still runs after iteration t's region.
        assert_eq!(check(src, &[1]), VerificationResult::Safe);
        // Region over both accesses works too.
        assert_eq!(check(src, &[0]), VerificationResult::Safe);
    }

    #[test]
    fn loop_race_against_program_order_resists_a_late_region() {
        // The write happens in the earlier line but the *later* iteration:
        // iteration t reads d[t+1], iteration t+1 writes it first thing, so a
        // region starting at the read leaves the write unordered before it.
        let src = "shared int d[3];\nparallel_for(2) {\n    d[i] = i;\n    x = d[i+1];\n}\n";
        assert_eq!(race_lines(check(src, &[])), (3, 4));
        assert_eq!(race_lines(check(src, &[1])), (3, 4));
        // A region covering both accesses orders them.
        assert_eq!(check(src, &[0]), VerificationResult::Safe);
    }

    #[test]
    fn constant_cell_in_loop_seen_by_one_iteration() {
        let src = "shared int d[4];\nparallel_for(2) {\n    d[0] = i;\n    x = d[i];\n}\n";
        let races = |enabled: &[u32]| {
            let ip = instrument(&parse(src).unwrap());
            let a = Assignment::from_enabled(ip.vars.len(), enabled);
            collect_races(&ip, &a)
                .into_iter()
                .map(|t| (t.first.loc.line, t.second.loc.line))
                .collect::<Vec<_>>()
        };
        // d[0] is written every iteration and read only in iteration 0, so
        // the writes race with each other and with the read.
        assert_eq!(races(&[]), vec![(3, 3), (3, 4)]);
        // A region from line 3 covers every later-iteration side.
        assert_eq!(check(src, &[0]), VerificationResult::Safe);
        // From line 4 it covers none of them: the write of iteration 1 is
        // the later-iteration side of both conflicts and sits on line 3.
        assert_eq!(races(&[1]), vec![(3, 3), (3, 4)]);
    }

    #[test]
    fn phases_split_accesses_exactly_at_the_boundary_line() {
        let src = "shared int a[3];\nshared int b[3];\nparallel(2) {\n    x = a[tid+1];\n    y = b[tid+1];\n    a[tid] = x;\n    b[tid] = y;\n}\n";
        // Boundary at the first write separates both pairs.
        assert_eq!(check(src, &[2]), VerificationResult::Safe);
        // Boundary between the reads leaves the b pair in one phase.
        let r = check(src, &[1]);
        assert_eq!(race_lines(r.clone()), (5, 7));
        match r {
            VerificationResult::Race(t) => assert_eq!(t.array, "b"),
            _ => unreachable!(),
        }
    }

    #[test]
    fn races_in_later_regions_are_found() {
        let src = "shared int a[3];\nshared int b[3];\nparallel(2) {\n    a[tid] = tid;\n}\nparallel_for(2) {\n    b[i] = i;\n    y = b[i+1];\n}\n";
        assert_eq!(race_lines(check(src, &[])), (7, 8));
    }

    #[test]
    fn wrong_arity_is_reported_not_panicked() {
        let ip = instrument(&parse(RACE).unwrap());
        let a = Assignment::all_false(ip.vars.len() + 1);
        match verify(&ip, &a) {
            VerificationResult::Other(msg) => assert!(msg.contains("placement variables")),
            r => panic!("expected Other, got {r:?}"),
        }
    }

    #[test]
    fn collect_races_orders_and_finds_all() {
        let src = "shared int a[8];\nshared int b[8];\nparallel(3) {\n    a[tid] = tid;\n    x = a[tid+1];\n    b[tid] = x;\n    y = b[tid+2];\n    a[tid+1] = y;\n}\n";
        let ip = instrument(&parse(src).unwrap());
        let races = collect_races(&ip, &Assignment::all_false(ip.vars.len()));
        let pairs: Vec<(u32, u32, &str)> = races
            .iter()
            .map(|t| (t.first.loc.line, t.second.loc.line, t.array.as_str()))
            .collect();
        assert!(pairs.windows(2).all(|w| w[0] <= w[1]));
        assert!(pairs.contains(&(4, 5, "a")));
        assert!(pairs.contains(&(6, 7, "b")));
        assert!(pairs.contains(&(4, 8, "a")));
    }
}
