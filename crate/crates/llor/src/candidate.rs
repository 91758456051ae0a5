//! Turns a truth assignment over placement variables into a concrete program.
//!
//! The same assignment is interpreted twice: [`sync_plan`] gives the abstract
//! reading (barrier boundaries per `parallel` region, one ordered-region span
//! per `parallel_for` loop) that the verifier and the interleaving oracle
//! share, and [`generate_repair_candidate`] renders it back into source text
//! together with the list of [`Edit`]s relative to the original program.
//! Stripped constructs whose variable stays enabled are restored verbatim, so
//! a program that already had the right synchronization round-trips to the
//! exact same bytes.

use crate::ast::{Program, RegionKind, SourceLoc};
use crate::instrument::{Assignment, InstrumentedProgram, RemovedKind};
use crate::parse::parse;
use serde::ser::{Serialize, SerializeMap, Serializer};
use std::collections::{BTreeMap, BTreeSet};

/// Inclusive line range of an ordered region. Statements on lines
/// `start_line..=end_line` execute inside the region; `start_line` may exceed
/// `end_line`, in which case the region protects nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start_line: u32,
    pub end_line: u32,
}

impl Span {
    pub fn contains(&self, line: u32) -> bool {
        self.start_line <= line && line <= self.end_line
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionPlan {
    /// Barrier lines in ascending order. A barrier at line `l` separates
    /// statements on lines `< l` from statements on lines `>= l`.
    Parallel { boundaries: Vec<u32> },
    /// The single ordered region, if any variable is enabled. It starts at
    /// the earliest enabled variable and always extends through the loop's
    /// last shared-access statement.
    ParallelFor { span: Option<Span> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncPlan {
    pub regions: Vec<RegionPlan>,
}

/// The synchronization structure an assignment denotes, region by region.
pub fn sync_plan(ip: &InstrumentedProgram, a: &Assignment) -> SyncPlan {
    let mut regions = Vec::with_capacity(ip.base.regions.len());
    for (idx, region) in ip.base.regions.iter().enumerate() {
        // Variable ids are dense in source order, so these lines come out
        // ascending.
        let enabled_lines: Vec<u32> = ip
            .vars
            .iter()
            .filter(|v| ip.var_region[v.id as usize] == idx && a.get(v.id))
            .map(|v| v.loc.line)
            .collect();
        let plan = match region.kind {
            RegionKind::Parallel => RegionPlan::Parallel {
                boundaries: enabled_lines,
            },
            RegionKind::ParallelFor => RegionPlan::ParallelFor {
                span: enabled_lines.first().map(|&start_line| Span {
                    start_line,
                    end_line: ip.shared_access_locs[idx]
                        .last()
                        .map(|l| l.line)
                        .or_else(|| region.body.last().map(|s| s.loc.line))
                        .unwrap_or(start_line),
                }),
            },
        };
        regions.push(plan);
    }
    SyncPlan { regions }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditAction {
    /// Insert `barrier;` immediately before the statement at `loc`.
    InsertBarrier,
    /// Add the `ordered` clause to the loop header at `loc`.
    AddOrderedClause,
    /// Wrap the statements from `start` through `end` in `ordered { }`.
    WrapOrdered { start: SourceLoc, end: SourceLoc },
    /// Delete the `barrier;` statement at `loc`.
    RemoveBarrier,
    /// Delete the `ordered {` at `loc` and its matching `}`.
    RemoveOrderedRegion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edit {
    pub action: EditAction,
    pub loc: SourceLoc,
}

impl Edit {
    pub fn action_name(&self) -> &'static str {
        match self.action {
            EditAction::InsertBarrier => "InsertBarrier",
            EditAction::AddOrderedClause => "AddOrderedClause",
            EditAction::WrapOrdered { .. } => "WrapOrdered",
            EditAction::RemoveBarrier => "RemoveBarrier",
            EditAction::RemoveOrderedRegion => "RemoveOrderedRegion",
        }
    }

    /// True for edits that delete synchronization the programmer wrote.
    pub fn is_removal(&self) -> bool {
        matches!(
            self.action,
            EditAction::RemoveBarrier | EditAction::RemoveOrderedRegion
        )
    }

    fn rank(&self) -> u8 {
        match self.action {
            EditAction::AddOrderedClause => 0,
            EditAction::InsertBarrier => 1,
            EditAction::WrapOrdered { .. } => 2,
            EditAction::RemoveBarrier => 3,
            EditAction::RemoveOrderedRegion => 4,
        }
    }
}

impl Serialize for Edit {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let extra = matches!(self.action, EditAction::WrapOrdered { .. }) as usize * 2;
        let mut map = serializer.serialize_map(Some(2 + extra))?;
        map.serialize_entry("action", self.action_name())?;
        map.serialize_entry("loc", &self.loc)?;
        if let EditAction::WrapOrdered { start, end } = &self.action {
            map.serialize_entry("startLoc", start)?;
            map.serialize_entry("endLoc", end)?;
        }
        map.end()
    }
}

/// A rendered repair: the new program, its source text, and the edit list in
/// the coordinates of the original program, sorted by position.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub program: Program,
    pub source: String,
    pub edits: Vec<Edit>,
}

/// Leading whitespace of a line, reused for inserted lines.
pub(crate) fn indent_of(line: &str) -> &str {
    &line[..line.len() - line.trim_start().len()]
}

/// Inserts the `ordered` clause right after the loop header's `)`.
pub(crate) fn with_ordered_clause(header: &str) -> String {
    match header.find(')') {
        Some(pos) => format!("{} ordered{}", &header[..=pos], &header[pos + 1..]),
        None => header.to_string(),
    }
}

/// Renders the program denoted by `a`: enabled barrier variables become
/// `barrier;` insertions, an enabled variable in a loop becomes one ordered
/// region from its statement through the loop's last shared access, and
/// stripped constructs are either restored in place (when the assignment
/// still wants them, at zero edits) or reported as removals.
pub fn generate_repair_candidate(ip: &InstrumentedProgram, a: &Assignment) -> Candidate {
    assert_eq!(a.len(), ip.vars.len(), "assignment arity mismatch");
    let plan = sync_plan(ip, a);
    let line_text = |line: u32| ip.base.lines[(line - 1) as usize].as_str();

    // Every stripped construct starts out deleted; restores un-skip lines.
    let mut skip: BTreeSet<u32> = BTreeSet::new();
    for rc in &ip.removed {
        match &rc.kind {
            RemovedKind::Barrier { loc } => {
                skip.insert(loc.line);
            }
            RemovedKind::OrderedBlock {
                begin, end_line, ..
            } => {
                skip.insert(begin.line);
                skip.insert(*end_line);
            }
        }
    }
    let mut before: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    let mut after: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    let mut headers: BTreeMap<u32, String> = BTreeMap::new();
    let mut edits: Vec<Edit> = Vec::new();

    for (idx, region) in ip.base.regions.iter().enumerate() {
        match &plan.regions[idx] {
            RegionPlan::Parallel { .. } => {
                for var in ip
                    .vars
                    .iter()
                    .filter(|v| ip.var_region[v.id as usize] == idx)
                {
                    let attached = ip.removed_for(var.id);
                    if a.get(var.id) {
                        if var.from_existing {
                            // Restore the construct closest to the statement;
                            // any earlier duplicates stay deleted.
                            let (keep, drop) = attached.split_last().expect("existing construct");
                            if let RemovedKind::Barrier { loc } = &keep.kind {
                                skip.remove(&loc.line);
                            }
                            for rc in drop {
                                if let RemovedKind::Barrier { loc } = &rc.kind {
                                    edits.push(Edit {
                                        action: EditAction::RemoveBarrier,
                                        loc: *loc,
                                    });
                                }
                            }
                        } else {
                            let indent = indent_of(line_text(var.loc.line));
                            before
                                .entry(var.loc.line)
                                .or_default()
                                .push(format!("{indent}barrier;"));
                            edits.push(Edit {
                                action: EditAction::InsertBarrier,
                                loc: var.loc,
                            });
                        }
                    } else {
                        for rc in attached {
                            if let RemovedKind::Barrier { loc } = &rc.kind {
                                edits.push(Edit {
                                    action: EditAction::RemoveBarrier,
                                    loc: *loc,
                                });
                            }
                        }
                    }
                }
            }
            RegionPlan::ParallelFor { span } => {
                let block = ip.removed.iter().find_map(|rc| match &rc.kind {
                    RemovedKind::OrderedBlock {
                        begin,
                        end_line,
                        first_stmt_line,
                        last_stmt_line,
                    } if ip.var_region[rc.var_id as usize] == idx => {
                        Some((*begin, *end_line, *first_stmt_line, *last_stmt_line))
                    }
                    _ => None,
                });
                let anchors = span.and_then(|span| {
                    let start = region
                        .body
                        .iter()
                        .find(|s| s.loc.line >= span.start_line)
                        .or_else(|| region.body.last())?;
                    let end = region
                        .body
                        .iter()
                        .rev()
                        .find(|s| s.loc.line <= span.end_line)
                        .filter(|s| s.loc.line >= start.loc.line)
                        .unwrap_or(start);
                    Some((start, end))
                });
                match anchors {
                    Some((start, end)) => {
                        if !region.has_ordered_clause {
                            headers.insert(
                                region.header_loc.line,
                                with_ordered_clause(line_text(region.header_loc.line)),
                            );
                            edits.push(Edit {
                                action: EditAction::AddOrderedClause,
                                loc: region.header_loc,
                            });
                        }
                        let restores = block.is_some_and(|(_, _, first, last)| {
                            first == Some(start.loc.line) && last == Some(end.loc.line)
                        });
                        if restores {
                            let (begin, end_line, _, _) = block.expect("checked above");
                            skip.remove(&begin.line);
                            skip.remove(&end_line);
                        } else {
                            if let Some((begin, _, _, _)) = block {
                                edits.push(Edit {
                                    action: EditAction::RemoveOrderedRegion,
                                    loc: begin,
                                });
                            }
                            let indent = indent_of(line_text(start.loc.line)).to_string();
                            before
                                .entry(start.loc.line)
                                .or_default()
                                .push(format!("{indent}ordered {{"));
                            after
                                .entry(end.loc.line)
                                .or_default()
                                .push(format!("{indent}}}"));
                            edits.push(Edit {
                                action: EditAction::WrapOrdered {
                                    start: start.loc,
                                    end: end.loc,
                                },
                                loc: start.loc,
                            });
                        }
                    }
                    None => {
                        // No region wanted; an existing block stays deleted
                        // and its header clause, if any, is left in place.
                        if let Some((begin, _, _, _)) = block {
                            edits.push(Edit {
                                action: EditAction::RemoveOrderedRegion,
                                loc: begin,
                            });
                        }
                    }
                }
            }
        }
    }

    let mut out: Vec<String> = Vec::new();
    for (idx0, raw) in ip.base.lines.iter().enumerate() {
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
    let source = out.join("\n") + "\n";
    let mut program = parse(&source).expect("rendered candidate is well-formed");
    program.name = ip.base.name.clone();

    edits.sort_by_key(|e| (e.loc.line, e.loc.col, e.rank()));
    Candidate {
        program,
        source,
        edits,
    }
}
