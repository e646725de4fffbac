//! Exact set-partitioning search for the integer chromatic index, plus the
//! k-fold cover search used to cross-check the fractional index.

use crate::budget::Deadline;
use crate::linkset::LinkSet;
use crate::matching::MatchingFamily;
use std::collections::HashMap;

use super::{IntegerResult, SolveError};

fn full_set(family: &MatchingFamily) -> LinkSet {
    let n = family.n_links();
    if n == 128 {
        LinkSet::from_bits(u128::MAX)
    } else {
        LinkSet::from_bits((1u128 << n) - 1)
    }
}

struct CoverSearch<'f> {
    family: &'f MatchingFamily,
    full: LinkSet,
    max_card: u32,
    /// Per link, the links it never shares a family matching with. Two
    /// conflicting links always land in distinct partition classes.
    conflict: Vec<u128>,
    /// Links by descending conflict count; seeds the greedy clique.
    order: Vec<u32>,
    /// Uncovered sets whose completion cost has a proven lower bound.
    /// Revisits through permuted choices are cut without re-searching.
    memo: HashMap<u128, u32>,
    deadline: Deadline,
    nodes: u64,
    best_count: u32,
    best: Vec<u32>,
    chosen: Vec<u32>,
    /// Stop as soon as the incumbent matches this proven lower bound.
    floor: u32,
    done: bool,
}

const MEMO_CAP: usize = 2_000_000;

/// `conflict[e]` holds the links that co-occur with `e` in no matching.
fn conflict_masks(family: &MatchingFamily, full: LinkSet) -> Vec<u128> {
    let mut masks = vec![full.bits(); family.n_links() as usize];
    for m in family.matchings() {
        for e in m.iter() {
            masks[e as usize] &= !m.bits();
        }
    }
    masks
}

impl CoverSearch<'_> {
    /// Greedy pairwise-conflicting subset of `uncovered`, highest conflict
    /// count first. Its size is a valid lower bound on the classes still
    /// needed, and pruning with a valid bound never cuts a branch that
    /// would have improved the incumbent, so the selected partition is
    /// unchanged.
    fn clique_bound(&self, uncovered: u128) -> u32 {
        let mut avail = uncovered;
        let mut size = 0u32;
        for &e in &self.order {
            if avail & (1u128 << e) != 0 {
                size += 1;
                avail &= self.conflict[e as usize];
                if avail == 0 {
                    break;
                }
            }
        }
        size
    }

    fn run(&mut self, covered: LinkSet, count: u32) -> Result<(), SolveError> {
        if self.done {
            return Ok(());
        }
        if self.nodes & 0xfff == 0 && self.deadline.expired() {
            return Err(SolveError::Budget);
        }
        self.nodes += 1;
        if covered == self.full {
            if count < self.best_count {
                self.best_count = count;
                self.best = self.chosen.clone();
                if self.best_count <= self.floor {
                    self.done = true;
                }
            }
            return Ok(());
        }
        // Admission by need: at least ceil(uncovered / widest matching)
        // more slots, at least one per pairwise-conflicting link, and at
        // least any bound proven on an earlier visit to this residual.
        let uncovered = self.full.bits() & !covered.bits();
        let residual = LinkSet::from_bits(uncovered).len();
        let mut need = residual.div_ceil(self.max_card).max(self.clique_bound(uncovered));
        if let Some(&proven) = self.memo.get(&uncovered) {
            need = need.max(proven);
        }
        if count + need >= self.best_count {
            return Ok(());
        }
        let e = LinkSet::from_bits(uncovered)
            .iter()
            .next()
            .expect("uncovered link exists");
        // Branch over matchings containing the lowest uncovered link, in
        // canonical position order, so the selection is deterministic.
        let candidates = &self.family.per_link()[e as usize];
        for &pos in candidates.iter() {
            let m = self.family.get(pos);
            if !m.is_disjoint(covered) {
                continue;
            }
            self.chosen.push(pos);
            let r = self.run(covered.union(m), count + 1);
            self.chosen.pop();
            r?;
            if self.done {
                return Ok(());
            }
        }
        // The subtree is exhausted, so no completion of this residual beats
        // the incumbent: its cost is at least best_count - count.
        let proven = self.best_count - count;
        if let Some(slot) = self.memo.get_mut(&uncovered) {
            *slot = (*slot).max(proven);
        } else if self.memo.len() < MEMO_CAP {
            self.memo.insert(uncovered, proven);
        }
        Ok(())
    }
}

/// Minimum number of family matchings that partition the link set, by
/// depth-first branch and bound. The singleton partition seeds the
/// incumbent. `floor` is an externally proven lower bound (pass 1 when
/// none is known); the search stops early once the incumbent meets it.
pub(super) fn solve_integer_bb(
    family: &MatchingFamily,
    floor: u32,
    deadline: Deadline,
) -> Result<IntegerResult, SolveError> {
    let n = family.n_links();
    if n == 0 {
        return Err(SolveError::EmptyInstance);
    }
    let max_card = family
        .matchings()
        .last()
        .map(|m| m.len())
        .expect("family is never empty");
    let full = full_set(family);
    let conflict = conflict_masks(family, full);
    let mut order: Vec<u32> = (0..n).collect();
    order.sort_by_key(|&e| (std::cmp::Reverse(conflict[e as usize].count_ones()), e));
    let mut search = CoverSearch {
        family,
        full,
        max_card,
        conflict,
        order,
        memo: HashMap::new(),
        deadline,
        nodes: 0,
        best_count: n,
        best: (0..n).collect(),
        chosen: Vec::new(),
        floor: floor.max(1),
        done: false,
    };
    if search.best_count > search.floor {
        search.run(LinkSet::EMPTY, 0)?;
    }
    let mut partition = search.best;
    partition.sort_unstable();
    if cfg!(debug_assertions) {
        let mut covered = LinkSet::EMPTY;
        for &pos in &partition {
            let m = family.get(pos);
            debug_assert!(m.is_disjoint(covered));
            covered = covered.union(m);
        }
        debug_assert_eq!(covered, full_set(family));
    }
    Ok(IntegerResult { chi_int: search.best_count, partition })
}

/// Minimum size of a multiset of family matchings covering every link
/// exactly `k` times, by iterative-deepening search with a failure memo.
///
/// Intended for small cross-check instances; the memo is capped at
/// `max_states` entries and the search reports a budget error beyond it.
pub fn chromatic_index_k(
    family: &MatchingFamily,
    k: u32,
    max_states: usize,
    deadline: Deadline,
) -> Result<u32, SolveError> {
    let n = family.n_links();
    if n == 0 {
        return Err(SolveError::EmptyInstance);
    }
    if n > 16 || k == 0 || k > 15 {
        return Err(SolveError::Internal(format!(
            "k-fold cover supports 1..=15 covers over at most 16 links, got k={k}, n={n}"
        )));
    }
    let max_card = family.matchings().last().map(|m| m.len()).unwrap();
    let total = k * n;
    let mut target = total.div_ceil(max_card).max(k);
    let mut memo: HashMap<(u64, u32), ()> = HashMap::new();
    loop {
        let mut search = KfoldSearch {
            family,
            deadline,
            memo: &mut memo,
            max_states,
            nodes: 0,
        };
        let demands = vec![k as u8; n as usize];
        if search.covers(&demands, total, target)? {
            return Ok(target);
        }
        // k * n singleton slots always suffice, so the loop terminates.
        debug_assert!(target < total);
        target += 1;
    }
}

struct KfoldSearch<'f, 'm> {
    family: &'f MatchingFamily,
    deadline: Deadline,
    /// Packed demand states (4 bits per link) that failed with a given
    /// number of slots left.
    memo: &'m mut HashMap<(u64, u32), ()>,
    max_states: usize,
    nodes: u64,
}

impl KfoldSearch<'_, '_> {
    fn pack(demands: &[u8]) -> u64 {
        demands
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &d)| acc | ((d as u64) << (4 * i)))
    }

    fn covers(
        &mut self,
        demands: &[u8],
        remaining_total: u32,
        slots: u32,
    ) -> Result<bool, SolveError> {
        if self.nodes & 0xfff == 0 && self.deadline.expired() {
            return Err(SolveError::Budget);
        }
        self.nodes += 1;
        if remaining_total == 0 {
            return Ok(true);
        }
        if slots == 0 {
            return Ok(false);
        }
        let max_card = self.family.matchings().last().unwrap().len();
        if slots * max_card < remaining_total {
            return Ok(false);
        }
        let key = (Self::pack(demands), slots);
        if self.memo.contains_key(&key) {
            return Ok(false);
        }
        let e = demands.iter().position(|&d| d > 0).unwrap() as u32;
        for &pos in self.family.per_link()[e as usize].iter().rev() {
            let m = self.family.get(pos);
            if m.iter().any(|f| demands[f as usize] == 0) {
                continue;
            }
            let mut next = demands.to_vec();
            for f in m.iter() {
                next[f as usize] -= 1;
            }
            if self.covers(&next, remaining_total - m.len(), slots - 1)? {
                return Ok(true);
            }
        }
        if self.memo.len() >= self.max_states {
            return Err(SolveError::Budget);
        }
        self.memo.insert(key, ());
        Ok(false)
    }
}
