//! Feasible matchings and their exhaustive enumeration.
//!
//! A feasible matching is a non-empty, pairwise node-disjoint link set in
//! which every member clears the SINR threshold against the others. By
//! hereditarity (interference only grows with the set), every subset of a
//! feasible matching is feasible, which lets the enumerator prune: a
//! partial set is only extended by links above its maximum index, and
//! branches die as soon as one extension is infeasible.
//!
//! Families are kept in a canonical order (ascending cardinality, then
//! lexicographic) so that every downstream result is reproducible
//! byte for byte.

use crate::budget::Deadline;
use crate::exact::Rat;
use crate::linkset::{LinkSet, MAX_LINKS};
use crate::net::Network;
use std::sync::OnceLock;

/// Screening limits for random instances: networks with more links are
/// rejected outright, and enumeration aborts once the family would exceed
/// `max_matchings`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_links: u32,
    pub max_matchings: u64,
}

impl Default for Limits {
    fn default() -> Limits {
        Limits { max_links: MAX_LINKS, max_matchings: 50_000_000 }
    }
}

/// Why an instance was screened out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterReason {
    /// No node pair is within the connection radius.
    NoLinks,
    /// More links than `max_links`.
    TooManyLinks { n_links: usize },
    /// The family would exceed `max_matchings`.
    TooManyMatchings,
}

/// Screening outcome for one instance.
pub enum InstanceScreen {
    Admitted(MatchingFamily),
    Rejected(FilterReason),
}

/// Errors during enumeration and family construction.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnumError {
    #[error("compute budget exceeded during enumeration")]
    Budget,
    #[error("family exceeds the matching cap")]
    MatchingOverflow,
    #[error("{0} links exceed the {MAX_LINKS}-link enumeration capacity")]
    TooManyLinks(usize),
}

/// Errors building families from explicit lists or text files.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error("matching lists link {link}, but the family has {n_links} links")]
    LinkOutOfRange { link: u32, n_links: u32 },
    #[error("matching {0} listed twice")]
    DuplicateMatching(String),
    #[error("empty matching listed")]
    EmptyMatching,
    #[error("{0} links exceed the {MAX_LINKS}-link capacity")]
    TooManyLinks(u32),
    #[error("family file: {0}")]
    Format(String),
}

/// The family of all feasible matchings of one instance, canonically
/// ordered. The first `n_links` entries are always the singletons in link
/// order.
#[derive(Debug, Clone)]
pub struct MatchingFamily {
    n_links: u32,
    matchings: Vec<LinkSet>,
    per_link: OnceLock<Vec<Vec<u32>>>,
}

impl MatchingFamily {
    fn new(n_links: u32, mut matchings: Vec<LinkSet>) -> MatchingFamily {
        matchings.sort_unstable_by_key(|s| s.canonical_key());
        debug_assert!((0..n_links)
            .all(|e| matchings.get(e as usize) == Some(&LinkSet::singleton(e))));
        MatchingFamily { n_links, matchings, per_link: OnceLock::new() }
    }

    pub fn n_links(&self) -> u32 {
        self.n_links
    }

    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }

    pub fn matchings(&self) -> &[LinkSet] {
        &self.matchings
    }

    pub fn get(&self, pos: u32) -> LinkSet {
        self.matchings[pos as usize]
    }

    /// Position of the singleton `{e}`; the canonical order pins it to `e`.
    pub fn singleton_position(&self, e: u32) -> u32 {
        debug_assert!(e < self.n_links);
        e
    }

    /// Position of a matching, if present.
    pub fn position_of(&self, s: LinkSet) -> Option<u32> {
        self.matchings
            .binary_search_by_key(&s.canonical_key(), |m| m.canonical_key())
            .ok()
            .map(|i| i as u32)
    }

    /// Family positions of the matchings containing each link, built on
    /// first use; families are often consumed by solvers that never need
    /// this index.
    pub fn per_link(&self) -> &[Vec<u32>] {
        self.per_link.get_or_init(|| {
            let mut index = vec![Vec::new(); self.n_links as usize];
            for (pos, m) in self.matchings.iter().enumerate() {
                for e in m.iter() {
                    index[e as usize].push(pos as u32);
                }
            }
            index
        })
    }

    /// Serializes the family: one matching per line, header first.
    pub fn to_text(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&format!("n_links {}\n", self.n_links));
        for m in &self.matchings {
            let mut first = true;
            for e in m.iter() {
                if !first {
                    out.push(' ');
                }
                out.push_str(&e.to_string());
                first = false;
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text form. Comment (`#`) and blank lines are skipped;
    /// missing singletons are supplied, so a file listing only the
    /// non-trivial matchings is complete.
    pub fn from_text(text: &str) -> Result<MatchingFamily, FamilyError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| {
            FamilyError::Format("missing n_links header".into())
        })?;
        let n_links = header
            .strip_prefix("n_links")
            .and_then(|rest| rest.trim().parse::<u32>().ok())
            .ok_or_else(|| FamilyError::Format(format!("bad header {header:?}")))?;
        let mut sets = Vec::new();
        for line in lines {
            let mut indices = Vec::new();
            for tok in line.split_whitespace() {
                let e: u32 = tok
                    .parse()
                    .map_err(|_| FamilyError::Format(format!("bad link index {tok:?}")))?;
                indices.push(e);
            }
            let set = LinkSet::from_indices(&indices).map_err(|e| match e {
                crate::linkset::LinkSetError::IndexOutOfRange(i) => {
                    FamilyError::LinkOutOfRange { link: i, n_links }
                }
                crate::linkset::LinkSetError::Duplicate(i) => {
                    FamilyError::Format(format!("link {i} repeated within a matching"))
                }
            })?;
            sets.push(set);
        }
        family_from_explicit_list(n_links, &sets)
    }
}

/// Builds a family from explicitly listed matchings. Singletons absent
/// from the list are added; the result is canonically ordered. The caller
/// asserts feasibility of every listed set.
pub fn family_from_explicit_list(
    n_links: u32,
    sets: &[LinkSet],
) -> Result<MatchingFamily, FamilyError> {
    if n_links > MAX_LINKS {
        return Err(FamilyError::TooManyLinks(n_links));
    }
    let full = if n_links == 128 { u128::MAX } else { (1u128 << n_links) - 1 };
    let mut seen = std::collections::HashSet::new();
    let mut matchings = Vec::with_capacity(sets.len() + n_links as usize);
    for s in sets {
        if s.is_empty() {
            return Err(FamilyError::EmptyMatching);
        }
        if s.bits() & !full != 0 {
            let link = s.iter().find(|&e| e >= n_links).unwrap();
            return Err(FamilyError::LinkOutOfRange { link, n_links });
        }
        if !seen.insert(s.bits()) {
            return Err(FamilyError::DuplicateMatching(s.to_string()));
        }
        matchings.push(*s);
    }
    for e in 0..n_links {
        let single = LinkSet::singleton(e);
        if seen.insert(single.bits()) {
            matchings.push(single);
        }
    }
    Ok(MatchingFamily::new(n_links, matchings))
}

/// Exhaustively enumerates every feasible matching of the network.
///
/// Aborts with [`EnumError::MatchingOverflow`] the moment the family would
/// exceed `max_matchings`, and with [`EnumError::Budget`] when the deadline
/// lapses. Most feasibility checks resolve through the precomputed integer
/// bounds; only checks the bounds cannot decide fall back to exact
/// rationals, so the result is identical to testing every subset exactly.
pub fn enumerate_feasible_matchings(
    net: &Network,
    max_matchings: u64,
    deadline: Deadline,
) -> Result<MatchingFamily, EnumError> {
    let n = net.n_links();
    if n > MAX_LINKS as usize {
        return Err(EnumError::TooManyLinks(n));
    }
    let conflicts = net.conflicts().expect("<=128 links have conflict masks");
    let mut dfs = Dfs {
        net,
        conflicts,
        senders: net.links().iter().map(|l| l.sender).collect(),
        receivers: net.links().iter().map(|l| l.receiver).collect(),
        deadline,
        visits: 0,
        members: Vec::new(),
        sum_lo: Vec::new(),
        sum_hi: Vec::new(),
        conflict_union: LinkSet::EMPTY,
        found: Vec::new(),
        max_matchings,
    };
    dfs.extend_from(0, LinkSet::EMPTY)?;
    Ok(MatchingFamily::new(n as u32, dfs.found))
}

struct Dfs<'a> {
    net: &'a Network,
    conflicts: &'a [LinkSet],
    senders: Vec<u32>,
    receivers: Vec<u32>,
    deadline: Deadline,
    visits: u64,
    members: Vec<u32>,
    /// Interference bound sums at each member's receiver, parallel to
    /// `members`.
    sum_lo: Vec<i128>,
    sum_hi: Vec<i128>,
    conflict_union: LinkSet,
    found: Vec<LinkSet>,
    max_matchings: u64,
}

impl Dfs<'_> {
    fn extend_from(&mut self, start: u32, current: LinkSet) -> Result<(), EnumError> {
        for f in start..self.net.n_links() as u32 {
            if self.visits & 0x3ff == 0 && self.deadline.expired() {
                return Err(EnumError::Budget);
            }
            self.visits += 1;
            if !self.conflict_union.is_disjoint(LinkSet::singleton(f)) {
                continue;
            }
            if !self.admit(f) {
                continue;
            }
            let grown = current.with(f);
            if self.found.len() as u64 >= self.max_matchings {
                return Err(EnumError::MatchingOverflow);
            }
            self.found.push(grown);
            self.push(f);
            let r = self.extend_from(f + 1, grown);
            self.pop(f);
            r?;
        }
        Ok(())
    }

    /// Whether the current set stays feasible with `f` added. Node
    /// disjointness is already established.
    fn admit(&self, f: u32) -> bool {
        let fast = self.net.fast();
        let rf = self.receivers[f as usize];
        let mut f_lo = 0i128;
        let mut f_hi = 0i128;
        for &m in &self.members {
            let idx = self.net.gain_index(self.senders[m as usize], rf);
            f_lo += fast.gain_lo[idx];
            f_hi = f_hi.saturating_add(fast.gain_hi[idx]);
        }
        if f_lo > fast.theta_hi[f as usize] {
            return false;
        }
        if f_hi > fast.theta_lo[f as usize] && !self.admit_exact(f, f) {
            return false;
        }
        for (i, &e) in self.members.iter().enumerate() {
            let idx = self.net.gain_index(self.senders[f as usize], self.receivers[e as usize]);
            let lo = self.sum_lo[i] + fast.gain_lo[idx];
            let hi = self.sum_hi[i].saturating_add(fast.gain_hi[idx]);
            if lo > fast.theta_hi[e as usize] {
                return false;
            }
            if hi > fast.theta_lo[e as usize] && !self.admit_exact(e, f) {
                return false;
            }
        }
        true
    }

    /// Exact check: interference at `e`'s receiver from the members plus
    /// `f` (minus `e` itself) against `e`'s budget.
    fn admit_exact(&self, e: u32, f: u32) -> bool {
        let re = self.receivers[e as usize];
        let mut total: Rat = num_traits::Zero::zero();
        for &m in self.members.iter().chain(std::iter::once(&f)) {
            if m != e {
                total += self.net.gain(self.senders[m as usize], re);
            }
        }
        total <= *self.net.theta(e)
    }

    fn push(&mut self, f: u32) {
        let fast = self.net.fast();
        let rf = self.receivers[f as usize];
        let mut f_lo = 0i128;
        let mut f_hi = 0i128;
        for (i, &e) in self.members.iter().enumerate() {
            let to_e = self.net.gain_index(self.senders[f as usize], self.receivers[e as usize]);
            self.sum_lo[i] += fast.gain_lo[to_e];
            self.sum_hi[i] = self.sum_hi[i].saturating_add(fast.gain_hi[to_e]);
            let from_e = self.net.gain_index(self.senders[e as usize], rf);
            f_lo += fast.gain_lo[from_e];
            f_hi = f_hi.saturating_add(fast.gain_hi[from_e]);
        }
        self.members.push(f);
        self.sum_lo.push(f_lo);
        self.sum_hi.push(f_hi);
        self.conflict_union = self.conflict_union.union(self.conflicts[f as usize]);
    }

    fn pop(&mut self, f: u32) {
        debug_assert_eq!(self.members.last(), Some(&f));
        self.members.pop();
        self.sum_lo.pop();
        self.sum_hi.pop();
        let fast = self.net.fast();
        for (i, &e) in self.members.iter().enumerate() {
            let to_e = self.net.gain_index(self.senders[f as usize], self.receivers[e as usize]);
            self.sum_lo[i] -= fast.gain_lo[to_e];
            // Saturated upper sums cannot be reversed by subtraction, so
            // rebuild this member's upper bound from scratch.
            if self.sum_hi[i] == i128::MAX {
                let re = self.receivers[e as usize];
                let mut hi = 0i128;
                for &m in &self.members {
                    if m != e {
                        let idx = self.net.gain_index(self.senders[m as usize], re);
                        hi = hi.saturating_add(fast.gain_hi[idx]);
                    }
                }
                self.sum_hi[i] = hi;
            } else {
                self.sum_hi[i] -= fast.gain_hi[to_e];
            }
        }
        self.conflict_union = LinkSet::EMPTY;
        for &m in &self.members {
            self.conflict_union = self.conflict_union.union(self.conflicts[m as usize]);
        }
    }
}

/// Applies the instance filters: reject on zero links, on too many links,
/// or on a family larger than the cap; otherwise admit with the family.
pub fn screen_instance(
    net: &Network,
    limits: &Limits,
    deadline: Deadline,
) -> Result<InstanceScreen, EnumError> {
    let n = net.n_links();
    if n == 0 {
        return Ok(InstanceScreen::Rejected(FilterReason::NoLinks));
    }
    let cap = limits.max_links.min(MAX_LINKS) as usize;
    if n > cap {
        return Ok(InstanceScreen::Rejected(FilterReason::TooManyLinks { n_links: n }));
    }
    match enumerate_feasible_matchings(net, limits.max_matchings, deadline) {
        Ok(family) => Ok(InstanceScreen::Admitted(family)),
        Err(EnumError::MatchingOverflow) => {
            Ok(InstanceScreen::Rejected(FilterReason::TooManyMatchings))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{generate_network, vertical_link_net, PhysParams};
    use crate::exact::Dec;
    use proptest::prelude::*;
    use std::time::Duration;

    #[test]
    fn three_link_family() {
        let net = vertical_link_net(&[0, 450, 900]);
        let family = enumerate_feasible_matchings(&net, 1_000, Deadline::none()).unwrap();
        let shown: Vec<String> =
            family.matchings().iter().map(|m| m.to_string()).collect();
        assert_eq!(shown, vec!["{0}", "{1}", "{2}", "{0,1}", "{0,2}", "{1,2}"]);
        assert_eq!(family.per_link()[0], vec![0, 3, 4]);
        assert_eq!(family.per_link()[1], vec![1, 3, 5]);
        assert_eq!(family.per_link()[2], vec![2, 4, 5]);
        for e in 0..3 {
            assert_eq!(family.singleton_position(e), e);
        }
        assert_eq!(
            family.position_of(LinkSet::from_indices(&[0, 2]).unwrap()),
            Some(4)
        );
        assert_eq!(
            family.position_of(LinkSet::from_indices(&[0, 1, 2]).unwrap()),
            None
        );
    }

    #[test]
    fn overflow_aborts() {
        let net = vertical_link_net(&[0, 450, 900]);
        assert_eq!(
            enumerate_feasible_matchings(&net, 3, Deadline::none()).unwrap_err(),
            EnumError::MatchingOverflow
        );
        assert_eq!(
            enumerate_feasible_matchings(&net, 6, Deadline::none())
                .unwrap()
                .len(),
            6
        );
    }

    #[test]
    fn lapsed_deadline_aborts() {
        let net = vertical_link_net(&[0, 450, 900]);
        let d = Deadline::after(Duration::ZERO);
        assert_eq!(
            enumerate_feasible_matchings(&net, 1_000, d).unwrap_err(),
            EnumError::Budget
        );
    }

    #[test]
    fn explicit_family_construction() {
        let pair = LinkSet::from_indices(&[0, 3]).unwrap();
        let family = family_from_explicit_list(7, &[pair]).unwrap();
        assert_eq!(family.len(), 8);
        assert_eq!(family.get(7), pair);
        // Listing a singleton explicitly does not duplicate it.
        let small = LinkSet::from_indices(&[0, 2]).unwrap();
        let family =
            family_from_explicit_list(3, &[LinkSet::singleton(1), small]).unwrap();
        assert_eq!(family.len(), 4);
        assert!(matches!(
            family_from_explicit_list(2, &[pair]),
            Err(FamilyError::LinkOutOfRange { link: 3, n_links: 2 })
        ));
        assert!(matches!(
            family_from_explicit_list(7, &[pair, pair]),
            Err(FamilyError::DuplicateMatching(_))
        ));
        assert!(matches!(
            family_from_explicit_list(7, &[LinkSet::EMPTY]),
            Err(FamilyError::EmptyMatching)
        ));
    }

    #[test]
    fn family_text_round_trip() {
        let net = vertical_link_net(&[0, 450, 900]);
        let family = enumerate_feasible_matchings(&net, 1_000, Deadline::none()).unwrap();
        let text = family.to_text(&["written by a test".into()]);
        assert!(text.starts_with("# written by a test\nn_links 3\n"));
        let back = MatchingFamily::from_text(&text).unwrap();
        assert_eq!(back.matchings(), family.matchings());
        assert_eq!(back.to_text(&[]), family.to_text(&[]));

        // Minimal file: only the non-singleton matchings listed.
        let sparse = "n_links 3\n0 1\n0 2\n1 2\n";
        let parsed = MatchingFamily::from_text(sparse).unwrap();
        assert_eq!(parsed.matchings(), family.matchings());
    }

    #[test]
    fn family_text_rejects_malformed() {
        assert!(MatchingFamily::from_text("").is_err());
        assert!(MatchingFamily::from_text("n_links x\n").is_err());
        assert!(MatchingFamily::from_text("0 1\n").is_err());
        assert!(MatchingFamily::from_text("n_links 2\n0 5\n").is_err());
        assert!(MatchingFamily::from_text("n_links 2\n0 zero\n").is_err());
    }

    #[test]
    fn screening_reasons() {
        let p = PhysParams::default();
        // Two nodes far apart: no links.
        let nodes = vec![
            crate::net::Node { id: 0, x: Dec::ZERO, y: Dec::ZERO },
            crate::net::Node { id: 1, x: Dec::from_int(5000), y: Dec::ZERO },
        ];
        let net =
            crate::net::Network::from_parts(p, Dec::from_int(10_000), None, nodes, vec![])
                .unwrap();
        let screen = screen_instance(&net, &Limits::default(), Deadline::none()).unwrap();
        assert!(matches!(screen, InstanceScreen::Rejected(FilterReason::NoLinks)));

        let net = vertical_link_net(&[0, 450, 900]);
        let tight = Limits { max_links: 2, max_matchings: 100 };
        let screen = screen_instance(&net, &tight, Deadline::none()).unwrap();
        assert!(matches!(
            screen,
            InstanceScreen::Rejected(FilterReason::TooManyLinks { n_links: 3 })
        ));

        let tiny = Limits { max_links: 128, max_matchings: 3 };
        let screen = screen_instance(&net, &tiny, Deadline::none()).unwrap();
        assert!(matches!(
            screen,
            InstanceScreen::Rejected(FilterReason::TooManyMatchings)
        ));

        let screen =
            screen_instance(&net, &Limits::default(), Deadline::none()).unwrap();
        assert!(matches!(screen, InstanceScreen::Admitted(f) if f.len() == 6));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        /// The pruned enumerator agrees with brute force over all subsets.
        #[test]
        fn matches_subset_oracle(seed in 0u64..400) {
            let p = PhysParams::default();
            let net = generate_network(8, &Dec::from_int(1500), &p, seed).unwrap();
            prop_assume!(net.n_links() >= 1 && net.n_links() <= 15);
            let family =
                enumerate_feasible_matchings(&net, 1 << 20, Deadline::none()).unwrap();
            let n = net.n_links() as u32;
            let mut expected = Vec::new();
            for bits in 1u128..(1u128 << n) {
                let s = LinkSet::from_bits(bits);
                if net.is_feasible(s).unwrap() {
                    expected.push(s);
                }
            }
            expected.sort_unstable_by_key(|s| s.canonical_key());
            prop_assert_eq!(family.matchings(), &expected[..]);
        }
    }
}
