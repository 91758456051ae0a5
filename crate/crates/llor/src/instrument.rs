//! Rewrites a program into its synchronization search space.
//!
//! Every statement that touches a shared array gets one Boolean placement
//! variable: enabling it means "insert a barrier immediately before this
//! statement" in `parallel` regions, or "this statement starts inside the
//! ordered region" in `parallel_for` loops. Programmer-written `barrier;`
//! statements and `ordered { }` blocks are stripped from the base program and
//! folded into the variable of the next (respectively first enclosed)
//! shared-access statement, marked `from_existing` so repairs can report
//! removals and zero-cost re-enables. A stripped construct with no statement
//! to attach to keeps a variable of its own at the construct's position.

use crate::ast::{Program, RegionKind, SourceLoc, Stmt, StmtOp};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    /// Barrier placement inside a `parallel` region.
    Barrier,
    /// Ordered-region entry inside a `parallel_for` loop.
    Ordered,
}

/// One Boolean placement switch. Ids are dense `0..m-1`, assigned in source
/// order across the whole program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BarrierVariable {
    pub id: u32,
    /// Line of the guarded statement, or of the stripped construct itself for
    /// position-only variables.
    pub loc: SourceLoc,
    pub kind: VarKind,
    /// True when this variable stands in for synchronization that was present
    /// in the input program.
    pub from_existing: bool,
}

/// A programmer-written construct that was stripped by instrumentation,
/// remembered so emission can either restore its original lines or report a
/// removal edit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovedConstruct {
    pub var_id: u32,
    pub kind: RemovedKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RemovedKind {
    Barrier {
        loc: SourceLoc,
    },
    /// `ordered {` ... `}` lines, plus the lines of the statements the block
    /// originally wrapped (empty for an empty block).
    OrderedBlock {
        begin: SourceLoc,
        end_line: u32,
        first_stmt_line: Option<u32>,
        last_stmt_line: Option<u32>,
    },
}

/// Total truth assignment over the placement variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn all_false(len: usize) -> Self {
        Assignment {
            values: vec![false; len],
        }
    }

    pub fn from_enabled(len: usize, enabled: &[u32]) -> Self {
        let mut a = Self::all_false(len);
        for &id in enabled {
            a.set(id, true);
        }
        a
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: u32) -> bool {
        self.values[id as usize]
    }

    pub fn set(&mut self, id: u32, value: bool) {
        self.values[id as usize] = value;
    }

    pub fn enabled_ids(&self) -> Vec<u32> {
        (0..self.values.len() as u32)
            .filter(|&i| self.values[i as usize])
            .collect()
    }

    pub fn count_enabled(&self) -> u32 {
        self.values.iter().filter(|&&v| v).count() as u32
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, id) in self.enabled_ids().iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "b{id}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrumentedProgram {
    /// The input program with all `barrier;` and `ordered { }` lines removed
    /// from region bodies. `base.lines` still holds the original source; the
    /// stripped lines are tracked in `removed`.
    pub base: Program,
    pub vars: Vec<BarrierVariable>,
    /// Region index of each variable, aligned with `vars`.
    pub var_region: Vec<usize>,
    /// Shared-access statement locations, one list per region, source order.
    pub shared_access_locs: Vec<Vec<SourceLoc>>,
    pub removed: Vec<RemovedConstruct>,
}

impl InstrumentedProgram {
    pub fn var(&self, id: u32) -> &BarrierVariable {
        &self.vars[id as usize]
    }

    /// Stripped constructs folded into variable `id` (usually zero or one;
    /// several when multiple barriers preceded the same statement).
    pub fn removed_for(&self, id: u32) -> Vec<&RemovedConstruct> {
        self.removed.iter().filter(|r| r.var_id == id).collect()
    }
}

/// The assignment every repair starts from: no synchronization enabled.
pub fn default_assignment(ip: &InstrumentedProgram) -> Assignment {
    Assignment::all_false(ip.vars.len())
}

/// An `ordered { }` wrapper mid-scan: where it opened and what it has
/// enclosed so far.
struct OpenOrdered {
    begin: SourceLoc,
    /// Var id of the first enclosed shared access, once one is seen.
    attached: Option<u32>,
    first_stmt_line: Option<u32>,
    last_stmt_line: Option<u32>,
}

pub fn instrument(program: &Program) -> InstrumentedProgram {
    let mut base = program.clone();
    let mut vars: Vec<BarrierVariable> = Vec::new();
    let mut var_region: Vec<usize> = Vec::new();
    let mut removed: Vec<RemovedConstruct> = Vec::new();
    let mut shared_access_locs: Vec<Vec<SourceLoc>> = Vec::new();

    for (region_idx, region) in program.regions.iter().enumerate() {
        shared_access_locs.push(region.shared_access_locs());
        let var_kind = match region.kind {
            RegionKind::Parallel => VarKind::Barrier,
            RegionKind::ParallelFor => VarKind::Ordered,
        };

        let mut new_body: Vec<Stmt> = Vec::new();
        // Barrier lines waiting for the next shared-access statement.
        let mut pending_barriers: Vec<SourceLoc> = Vec::new();
        let mut open_ordered: Option<OpenOrdered> = None;

        let push_var = |vars: &mut Vec<BarrierVariable>,
                        var_region: &mut Vec<usize>,
                        loc: SourceLoc,
                        from_existing: bool|
         -> u32 {
            let id = vars.len() as u32;
            vars.push(BarrierVariable {
                id,
                loc,
                kind: var_kind,
                from_existing,
            });
            var_region.push(region_idx);
            id
        };

        for stmt in &region.body {
            match &stmt.op {
                StmtOp::Barrier => pending_barriers.push(stmt.loc),
                StmtOp::OrderedBegin => {
                    open_ordered = Some(OpenOrdered {
                        begin: stmt.loc,
                        attached: None,
                        first_stmt_line: None,
                        last_stmt_line: None,
                    });
                }
                StmtOp::OrderedEnd => {
                    let open = open_ordered.take().expect("parser pairs ordered blocks");
                    let var_id = match open.attached {
                        Some(id) => id,
                        // Empty of shared accesses: keep a position-only
                        // variable at the block's own opening line.
                        None => push_var(&mut vars, &mut var_region, open.begin, true),
                    };
                    removed.push(RemovedConstruct {
                        var_id,
                        kind: RemovedKind::OrderedBlock {
                            begin: open.begin,
                            end_line: stmt.loc.line,
                            first_stmt_line: open.first_stmt_line,
                            last_stmt_line: open.last_stmt_line,
                        },
                    });
                }
                _ => {
                    if stmt.is_shared_access() {
                        let in_fresh_block = open_ordered
                            .as_ref()
                            .is_some_and(|open| open.attached.is_none());
                        let from_existing = !pending_barriers.is_empty() || in_fresh_block;
                        let id = push_var(&mut vars, &mut var_region, stmt.loc, from_existing);
                        for loc in pending_barriers.drain(..) {
                            removed.push(RemovedConstruct {
                                var_id: id,
                                kind: RemovedKind::Barrier { loc },
                            });
                        }
                        if in_fresh_block {
                            open_ordered.as_mut().unwrap().attached = Some(id);
                        }
                    }
                    if let Some(open) = &mut open_ordered {
                        open.first_stmt_line.get_or_insert(stmt.loc.line);
                        open.last_stmt_line = Some(stmt.loc.line);
                    }
                    new_body.push(stmt.clone());
                }
            }
        }
        // Barriers with no shared access after them keep position-only
        // variables at their own lines.
        for loc in pending_barriers {
            let id = push_var(&mut vars, &mut var_region, loc, true);
            removed.push(RemovedConstruct {
                var_id: id,
                kind: RemovedKind::Barrier { loc },
            });
        }

        base.regions[region_idx].body = new_body;
    }

    InstrumentedProgram {
        base,
        vars,
        var_region,
        shared_access_locs,
        removed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;

    #[test]
    fn race_example_gets_two_barrier_vars() {
        let src = "shared int data[3];\nparallel(2) {\n    compute;\n    temp = data[tid+1];\n\n    data[tid] = temp;\n}\n";
        let ip = instrument(&parse(src).unwrap());
        assert_eq!(ip.vars.len(), 2);
        assert_eq!(ip.vars[0].id, 0);
        assert_eq!(ip.vars[0].loc.line, 4);
        assert_eq!(ip.vars[0].kind, VarKind::Barrier);
        assert!(!ip.vars[0].from_existing);
        assert_eq!(ip.vars[1].loc.line, 6);
        let a = default_assignment(&ip);
        assert_eq!(a.len(), 2);
        assert_eq!(a.count_enabled(), 0);
    }

    #[test]
    fn parallel_for_vars_are_ordered_kind() {
        let src = "shared int d[3];\nparallel_for(2) {\n    temp = d[i+1];\n    d[i] = temp;\n}\n";
        let ip = instrument(&parse(src).unwrap());
        assert_eq!(ip.vars.len(), 2);
        assert!(ip.vars.iter().all(|v| v.kind == VarKind::Ordered));
    }

    #[test]
    fn existing_barrier_attaches_to_next_access() {
        let src = "shared int data[3];\nparallel(2) {\n    temp = data[tid+1];\n    barrier;\n    data[tid] = temp;\n}\n";
        let ip = instrument(&parse(src).unwrap());
        assert_eq!(ip.vars.len(), 2);
        assert!(!ip.vars[0].from_existing);
        assert!(ip.vars[1].from_existing);
        assert_eq!(ip.vars[1].loc.line, 5);
        assert_eq!(ip.removed.len(), 1);
        assert_eq!(ip.removed[0].var_id, 1);
        // The barrier statement is gone from the base body.
        assert_eq!(ip.base.regions[0].body.len(), 2);
        assert!(ip.base.regions[0]
            .body
            .iter()
            .all(|s| !matches!(s.op, StmtOp::Barrier)));
    }

    #[test]
    fn trailing_barrier_becomes_position_only_var() {
        let src = "shared int data[3];\nparallel(2) {\n    data[tid] = 1;\n    barrier;\n    compute;\n}\n";
        let ip = instrument(&parse(src).unwrap());
        assert_eq!(ip.vars.len(), 2);
        assert_eq!(ip.vars[1].loc.line, 4);
        assert!(ip.vars[1].from_existing);
    }

    #[test]
    fn ordered_block_attaches_to_first_enclosed_access() {
        let src = "shared int d[3];\nparallel_for(2) ordered {\n    temp = d[i+1];\n    ordered {\n        d[i] = temp;\n    }\n}\n";
        let ip = instrument(&parse(src).unwrap());
        assert_eq!(ip.vars.len(), 2);
        assert!(ip.vars[1].from_existing);
        assert_eq!(ip.vars[1].loc.line, 5);
        match &ip.removed[0].kind {
            RemovedKind::OrderedBlock {
                begin,
                end_line,
                first_stmt_line,
                last_stmt_line,
            } => {
                assert_eq!(begin.line, 4);
                assert_eq!(*end_line, 6);
                assert_eq!(*first_stmt_line, Some(5));
                assert_eq!(*last_stmt_line, Some(5));
            }
            k => panic!("unexpected removed kind {k:?}"),
        }
        // The clause on the header is retained.
        assert!(ip.base.regions[0].has_ordered_clause);
    }

    #[test]
    fn empty_ordered_block_keeps_position_only_var() {
        let src = "shared int d[4];\nparallel_for(3) ordered {\n    t = d[i+2];\n    ordered {\n        compute;\n    }\n    d[i] = t;\n}\n";
        let ip = instrument(&parse(src).unwrap());
        assert_eq!(ip.vars.len(), 3);
        assert_eq!(ip.vars[1].loc.line, 4);
        assert!(ip.vars[1].from_existing);
        assert_eq!(ip.vars[2].loc.line, 7);
        match &ip.removed[0].kind {
            RemovedKind::OrderedBlock {
                first_stmt_line,
                last_stmt_line,
                ..
            } => {
                // The wrapped compute statement still defines the block span.
                assert_eq!(*first_stmt_line, Some(5));
                assert_eq!(*last_stmt_line, Some(5));
            }
            k => panic!("unexpected removed kind {k:?}"),
        }
        // Ids stay ordered by source position.
        let lines: Vec<u32> = ip.vars.iter().map(|v| v.loc.line).collect();
        assert_eq!(lines, vec![3, 4, 7]);
    }

    #[test]
    fn var_count_matches_shared_access_statements() {
        let src = "shared int a[4];\nparallel(2) {\n    compute;\n    a[tid] = a[tid+1];\n    x = a[tid];\n}\n";
        let p = parse(src).unwrap();
        let ip = instrument(&p);
        // The read-write line collapses to a single variable.
        assert_eq!(ip.vars.len(), 2);
        assert_eq!(ip.shared_access_locs[0].len(), 2);
    }

    #[test]
    fn instrumenting_base_is_placement_idempotent() {
        let src = "shared int data[3];\nparallel(2) {\n    temp = data[tid+1];\n    barrier;\n    data[tid] = temp;\n}\n";
        let ip = instrument(&parse(src).unwrap());
        let again = instrument(&ip.base);
        assert_eq!(again.base, ip.base);
        assert!(again.removed.is_empty());
        let placements: Vec<(u32, SourceLoc, VarKind)> =
            again.vars.iter().map(|v| (v.id, v.loc, v.kind)).collect();
        let orig: Vec<(u32, SourceLoc, VarKind)> =
            ip.vars.iter().map(|v| (v.id, v.loc, v.kind)).collect();
        assert_eq!(placements, orig);
    }
}
