//! Positive monotone clause sets over placement variables, and the two
//! strategies for picking a satisfying assignment.
//!
//! Every learned clause is a disjunction of un-negated variables, so a clause
//! set is satisfiable exactly when it contains no empty clause, and solving
//! for a smallest satisfying assignment is the minimum hitting set problem:
//! pick a set of variables meeting every clause.

use crate::instrument::Assignment;
use std::collections::BTreeSet;
use thiserror::Error;

/// A positive clause: the disjunction of the contained variable ids.
pub type Clause = BTreeSet<u32>;

pub fn clause_of(ids: &[u32]) -> Clause {
    ids.iter().copied().collect()
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClauseError {
    /// The engine never learns the same clause twice; a duplicate indicates a
    /// verifier or bookkeeping bug upstream.
    #[error("duplicate clause {{{}}}", format_clause(.0))]
    DuplicateClause(Clause),
}

fn format_clause(c: &Clause) -> String {
    c.iter()
        .map(|id| format!("b{id}"))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClauseSet {
    var_count: u32,
    clauses: Vec<Clause>,
}

impl ClauseSet {
    pub fn new(var_count: u32) -> Self {
        ClauseSet {
            var_count,
            clauses: Vec::new(),
        }
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }

    /// Clauses in insertion order.
    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(|c| c.is_empty())
    }

    pub fn add_clause(&mut self, clause: Clause) -> Result<(), ClauseError> {
        for id in &clause {
            assert!(
                *id < self.var_count,
                "clause variable b{id} out of range (var count {})",
                self.var_count
            );
        }
        if self.clauses.contains(&clause) {
            return Err(ClauseError::DuplicateClause(clause));
        }
        self.clauses.push(clause);
        Ok(())
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&id| a.get(id)))
    }

    /// DIMACS-style rendering: one clause per line, 1-based variable numbers,
    /// `0`-terminated.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.var_count, self.clauses.len());
        for c in &self.clauses {
            for id in c {
                out.push_str(&(id + 1).to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Greedy minimal-hitting-set strategy: repeatedly enable the variable that
/// meets the most unmet clauses, breaking ties toward the smallest id.
/// Returns `None` exactly when the set contains an empty clause. The result
/// always satisfies `phi` but may enable more variables than necessary.
pub fn solve_mhs(phi: &ClauseSet) -> Option<Assignment> {
    if phi.has_empty_clause() {
        return None;
    }
    let mut uncovered: Vec<&Clause> = phi.clauses.iter().collect();
    let mut chosen: Vec<u32> = Vec::new();
    while !uncovered.is_empty() {
        let mut counts = vec![0u32; phi.var_count as usize];
        for c in &uncovered {
            for &id in *c {
                counts[id as usize] += 1;
            }
        }
        let best = (0..phi.var_count)
            .max_by_key(|&id| (counts[id as usize], std::cmp::Reverse(id)))
            .expect("nonempty clause over valid ids");
        debug_assert!(counts[best as usize] > 0);
        chosen.push(best);
        uncovered.retain(|c| !c.contains(&best));
    }
    Some(Assignment::from_enabled(phi.var_count as usize, &chosen))
}

/// Exact partial-MaxSAT strategy: every clause is hard, every variable has a
/// unit soft clause preferring `false`, so the optimum is a hitting set of
/// minimum cardinality. Realized as branch-and-bound over the clauses with
/// the greedy solution as the initial incumbent; ties in cardinality resolve
/// to the lexicographically smallest set of enabled ids. Returns `None`
/// exactly when the set contains an empty clause.
pub fn solve_maxsat(phi: &ClauseSet) -> Option<Assignment> {
    if phi.has_empty_clause() {
        return None;
    }
    // Dropping supersets is sound: any choice hitting the subset also hits
    // the superset.
    let mut clauses: Vec<Clause> = Vec::new();
    for c in &phi.clauses {
        if clauses.iter().any(|kept| kept.is_subset(c)) {
            continue;
        }
        clauses.retain(|kept| !c.is_subset(kept));
        clauses.push(c.clone());
    }

    let greedy = solve_mhs(phi).expect("no empty clause");
    let mut best: Vec<u32> = greedy.enabled_ids();

    let mut chosen: Vec<u32> = Vec::new();
    branch(&clauses, &mut chosen, &mut best);
    Some(Assignment::from_enabled(phi.var_count as usize, &best))
}

fn branch(clauses: &[Clause], chosen: &mut Vec<u32>, best: &mut Vec<u32>) {
    let uncovered: Vec<&Clause> = clauses
        .iter()
        .filter(|c| !c.iter().any(|id| chosen.contains(id)))
        .collect();
    if uncovered.is_empty() {
        let mut candidate = chosen.clone();
        candidate.sort_unstable();
        if candidate.len() < best.len() || (candidate.len() == best.len() && candidate < *best) {
            *best = candidate;
        }
        return;
    }
    if chosen.len() + disjoint_lower_bound(&uncovered) > best.len() {
        return;
    }
    let first = uncovered[0];
    for &id in first {
        chosen.push(id);
        branch(clauses, chosen, best);
        chosen.pop();
    }
}

/// Count of pairwise variable-disjoint unmet clauses: each needs its own
/// distinct variable, so this lower-bounds the remaining picks.
fn disjoint_lower_bound(uncovered: &[&Clause]) -> usize {
    let mut used: BTreeSet<u32> = BTreeSet::new();
    let mut count = 0;
    for c in uncovered {
        if c.iter().all(|id| !used.contains(id)) {
            used.extend(c.iter().copied());
            count += 1;
        }
    }
    count
}

/// True when `a` enables no more variables than the MaxSAT optimum for `phi`.
/// Callers pass assignments that satisfy `phi`; unsatisfiable sets yield
/// `false`.
pub fn check_optimal(phi: &ClauseSet, a: &Assignment) -> bool {
    debug_assert!(phi.is_satisfied_by(a), "check_optimal on unsatisfied phi");
    match solve_maxsat(phi) {
        Some(opt) => a.count_enabled() == opt.count_enabled(),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(var_count: u32, clauses: &[&[u32]]) -> ClauseSet {
        let mut phi = ClauseSet::new(var_count);
        for c in clauses {
            phi.add_clause(clause_of(c)).unwrap();
        }
        phi
    }

    #[test]
    fn duplicate_clause_rejected() {
        let mut phi = ClauseSet::new(5);
        phi.add_clause(clause_of(&[2, 3])).unwrap();
        assert_eq!(
            phi.add_clause(clause_of(&[3, 2])),
            Err(ClauseError::DuplicateClause(clause_of(&[2, 3])))
        );
    }

    #[test]
    fn greedy_picks_shared_variable() {
        let phi = set(5, &[&[2, 3], &[3, 4]]);
        let a = solve_mhs(&phi).unwrap();
        assert_eq!(a.enabled_ids(), vec![3]);
    }

    #[test]
    fn empty_set_solves_all_false() {
        let phi = ClauseSet::new(4);
        assert_eq!(solve_mhs(&phi).unwrap().count_enabled(), 0);
        assert_eq!(solve_maxsat(&phi).unwrap().count_enabled(), 0);
    }

    #[test]
    fn empty_clause_is_unsat() {
        let mut phi = ClauseSet::new(3);
        phi.add_clause(Clause::new()).unwrap();
        assert!(solve_mhs(&phi).is_none());
        assert!(solve_maxsat(&phi).is_none());
    }

    #[test]
    fn maxsat_matches_worked_example() {
        let phi = set(5, &[&[2, 3], &[3, 4]]);
        let a = solve_maxsat(&phi).unwrap();
        assert_eq!(a.enabled_ids(), vec![3]);
    }

    #[test]
    fn disjoint_units_need_both() {
        let phi = set(3, &[&[1], &[2]]);
        let a = solve_maxsat(&phi).unwrap();
        assert_eq!(a.enabled_ids(), vec![1, 2]);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let phi = set(4, &[&[0, 1], &[2, 3]]);
        let a = solve_maxsat(&phi).unwrap();
        assert_eq!(a.enabled_ids(), vec![0, 2]);
        // Greedy tie-break also prefers smaller ids.
        let phi = set(2, &[&[0, 1]]);
        assert_eq!(solve_mhs(&phi).unwrap().enabled_ids(), vec![0]);
        assert_eq!(solve_maxsat(&phi).unwrap().enabled_ids(), vec![0]);
    }

    #[test]
    fn check_optimal_examples() {
        let phi = set(5, &[&[2, 3], &[3, 4]]);
        assert!(check_optimal(&phi, &Assignment::from_enabled(5, &[3])));
        assert!(!check_optimal(&phi, &Assignment::from_enabled(5, &[2, 4])));
    }

    #[test]
    fn greedy_can_be_suboptimal_but_valid() {
        // Variable 2 meets five clauses and gets picked first, but {0,1}
        // meets all eight; greedy lands on three variables.
        let phi = set(
            9,
            &[
                &[0, 2],
                &[0, 2, 3],
                &[0, 2, 4],
                &[0, 5],
                &[1, 2],
                &[1, 2, 6],
                &[1, 7],
                &[1, 8],
            ],
        );
        let greedy = solve_mhs(&phi).unwrap();
        let opt = solve_maxsat(&phi).unwrap();
        assert!(phi.is_satisfied_by(&greedy));
        assert!(phi.is_satisfied_by(&opt));
        assert_eq!(greedy.enabled_ids(), vec![0, 1, 2]);
        assert_eq!(opt.enabled_ids(), vec![0, 1]);
    }

    #[test]
    fn dimacs_uses_one_based_ids() {
        let phi = set(5, &[&[0, 2], &[4]]);
        assert_eq!(phi.to_dimacs(), "p cnf 5 2\n1 3 0\n5 0\n");
        let mut phi = ClauseSet::new(1);
        phi.add_clause(Clause::new()).unwrap();
        assert_eq!(phi.to_dimacs(), "p cnf 1 1\n0\n");
    }
}
