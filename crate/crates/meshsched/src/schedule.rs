//! STDMA slot schedules realized from exact fractional solutions.
//!
//! An optimal fractional cover with weights `x_M = p_M/q_M` becomes a
//! periodic schedule by scaling with `q* = lcm(q_M)`: matching `M` owns
//! `T_M = q*·x_M` of the period's `T* = q*·chi*` slots, and every link
//! transmits in exactly `q*` slots. Per-link throughput is `q*/T* =
//! 1/chi*`, so a fractional schedule beats repeating an optimal integral
//! coloring exactly when `T* < chi'·q*`.

use crate::chromatic::{FractionalResult, IntegerResult};
use crate::exact::{lcm_of_denominators, Int, Rat};
use crate::linkset::LinkSet;
use crate::matching::MatchingFamily;
use crate::net::{ModelError, Network};
use num_traits::{One, Zero};
use std::fmt::Write as _;

/// Largest period written or expanded as an explicit slot list.
pub const MAX_MATERIALIZED_SLOTS: u64 = 1 << 20;

/// A periodic schedule in multiplicity form: each scheduled matching with
/// its slots per period. Explicit slot lists are materialized on demand
/// because `t_star` is unbounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    /// `(matching, slots per period)`, in canonical matching order.
    entries: Vec<(LinkSet, Int)>,
    t_star: Int,
    q_star: Int,
    /// The fractional index this schedule claims to realize.
    chi_star: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScheduleError {
    #[error("a schedule needs a non-empty support")]
    EmptySupport,
    #[error("period of {0} slots exceeds the materialization cap")]
    TooManySlots(Int),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One verification failure; `verify_schedule` reports the first found.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScheduleViolation {
    #[error("period t={t_star}, q={q_star} is not positive")]
    BadPeriod { t_star: Int, q_star: Int },
    #[error("declared {declared} total slots but entries supply {actual}")]
    TotalMismatch { declared: Int, actual: Int },
    #[error("slot {slot} uses unknown link {link}")]
    UnknownLink { slot: Int, link: u32 },
    #[error("slot {slot} is not a feasible matching: {links}")]
    InfeasibleSlot { slot: Int, links: LinkSet },
    #[error("link {link} is scheduled {count} times per period, expected {expected}")]
    WrongLinkCount { link: u32, count: Int, expected: Int },
    #[error("schedule claims index {claimed} but realizes {actual}")]
    RatioMismatch { claimed: Rat, actual: Rat },
}

impl Schedule {
    pub fn entries(&self) -> &[(LinkSet, Int)] {
        &self.entries
    }

    pub fn t_star(&self) -> &Int {
        &self.t_star
    }

    pub fn q_star(&self) -> &Int {
        &self.q_star
    }

    pub fn chi_star(&self) -> &Rat {
        &self.chi_star
    }

    /// The explicit slot list, one matching per slot, entries repeated
    /// `T_M` times in order.
    pub fn slots(&self) -> Result<Vec<LinkSet>, ScheduleError> {
        let total = u64::try_from(&self.t_star)
            .ok()
            .filter(|&t| t <= MAX_MATERIALIZED_SLOTS)
            .ok_or_else(|| ScheduleError::TooManySlots(self.t_star.clone()))?;
        let mut out = Vec::with_capacity(total as usize);
        for (m, t) in &self.entries {
            let reps = u64::try_from(t).map_err(|_| {
                ScheduleError::TooManySlots(self.t_star.clone())
            })?;
            for _ in 0..reps {
                out.push(*m);
            }
        }
        Ok(out)
    }

    /// Serializes the schedule: a `T <t> q <q>` header, then one line per
    /// slot holding the slot index and its link ids.
    pub fn to_text(&self, comments: &[String]) -> Result<String, ScheduleError> {
        let slots = self.slots()?;
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        let _ = writeln!(out, "T {} q {}", self.t_star, self.q_star);
        for (i, m) in slots.iter().enumerate() {
            let _ = write!(out, "{i}");
            for e in m.iter() {
                let _ = write!(out, " {e}");
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses the text form. Comment (`#`) and blank lines are skipped;
    /// slot indices must run 0, 1, … in order; consecutive identical
    /// slots collapse back into one multiplicity entry.
    pub fn from_text(text: &str) -> Result<Schedule, ScheduleError> {
        let fail = |line: usize, msg: String| ScheduleError::Parse { line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| fail(0, "missing T/q header".into()))?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        let (t_star, q_star) = match tok.as_slice() {
            ["T", t, "q", q] => {
                let t: Int = t
                    .parse()
                    .map_err(|_| fail(hline, format!("bad slot count {t:?}")))?;
                let q: Int = q
                    .parse()
                    .map_err(|_| fail(hline, format!("bad activation count {q:?}")))?;
                (t, q)
            }
            _ => return Err(fail(hline, format!("bad header {header:?}"))),
        };
        if t_star < Int::one() || q_star < Int::one() {
            return Err(fail(hline, "slot and activation counts must be positive".into()));
        }
        if u64::try_from(&t_star).ok().filter(|&t| t <= MAX_MATERIALIZED_SLOTS).is_none()
        {
            return Err(ScheduleError::TooManySlots(t_star));
        }
        let mut entries: Vec<(LinkSet, Int)> = Vec::new();
        let mut next_slot = 0u64;
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            let idx_tok = toks.next().expect("filtered lines are non-empty");
            let idx: u64 = idx_tok
                .parse()
                .map_err(|_| fail(ln, format!("bad slot index {idx_tok:?}")))?;
            if idx != next_slot {
                return Err(fail(ln, format!("slot index {idx}, expected {next_slot}")));
            }
            next_slot += 1;
            let mut links = Vec::new();
            for t in toks {
                let e: u32 = t
                    .parse()
                    .map_err(|_| fail(ln, format!("bad link id {t:?}")))?;
                links.push(e);
            }
            if links.is_empty() {
                return Err(fail(ln, format!("slot {idx} has no links")));
            }
            let set = LinkSet::from_indices(&links)
                .map_err(|e| fail(ln, e.to_string()))?;
            match entries.last_mut() {
                Some((m, t)) if *m == set => *t += Int::one(),
                _ => entries.push((set, Int::one())),
            }
        }
        if Int::from(next_slot) != t_star {
            return Err(fail(
                0,
                format!("header declares {t_star} slots but {next_slot} listed"),
            ));
        }
        let chi_star = Rat::new(t_star.clone(), q_star.clone());
        Ok(Schedule { entries, t_star, q_star, chi_star })
    }
}

/// Scales an optimal fractional cover into a periodic schedule. The
/// support's matchings keep their canonical order; multiplicities are
/// exact integers by construction.
pub fn build_schedule(
    frac: &FractionalResult,
    family: &MatchingFamily,
) -> Result<Schedule, ScheduleError> {
    let weights: Vec<Rat> = frac.support.iter().map(|(_, x)| x.clone()).collect();
    let q_star = lcm_of_denominators(&weights).map_err(|_| ScheduleError::EmptySupport)?;
    let mut entries = Vec::with_capacity(frac.support.len());
    let mut t_star = Int::zero();
    for (pos, x) in &frac.support {
        debug_assert!(x > &Rat::zero());
        debug_assert!((&q_star * x.numer() % x.denom()).is_zero());
        let t_m = &q_star * x.numer() / x.denom();
        t_star += &t_m;
        entries.push((family.get(*pos), t_m));
    }
    debug_assert_eq!(
        Rat::new(t_star.clone(), q_star.clone()),
        frac.chi_star,
        "period must realize the fractional index"
    );
    Ok(Schedule { entries, t_star, q_star, chi_star: frac.chi_star.clone() })
}

/// Checks a schedule against the physical model: totals consistent, every
/// slot a feasible matching, every link on exactly `q*` slots per period,
/// and the realized `t*/q*` equal to the claimed index. Returns the first
/// violation found.
pub fn verify_schedule(s: &Schedule, net: &Network) -> Result<(), ScheduleViolation> {
    if s.t_star < Int::one() || s.q_star < Int::one() {
        return Err(ScheduleViolation::BadPeriod {
            t_star: s.t_star.clone(),
            q_star: s.q_star.clone(),
        });
    }
    let actual: Int = s.entries.iter().map(|(_, t)| t).sum();
    if actual != s.t_star {
        return Err(ScheduleViolation::TotalMismatch {
            declared: s.t_star.clone(),
            actual,
        });
    }
    let mut start = Int::zero();
    for (m, t) in &s.entries {
        match net.is_feasible(*m) {
            Ok(true) => {}
            Ok(false) | Err(ModelError::EmptyLinkSet) => {
                return Err(ScheduleViolation::InfeasibleSlot {
                    slot: start,
                    links: *m,
                });
            }
            Err(ModelError::UnknownLink(link)) => {
                return Err(ScheduleViolation::UnknownLink { slot: start, link });
            }
            Err(other) => unreachable!("is_feasible cannot fail with {other}"),
        }
        start += t;
    }
    let n = net.n_links();
    let mut counts = vec![Int::zero(); n];
    for (m, t) in &s.entries {
        for e in m.iter() {
            counts[e as usize] += t;
        }
    }
    for (e, count) in counts.into_iter().enumerate() {
        if count != s.q_star {
            return Err(ScheduleViolation::WrongLinkCount {
                link: e as u32,
                count,
                expected: s.q_star.clone(),
            });
        }
    }
    let realized = Rat::new(s.t_star.clone(), s.q_star.clone());
    if realized != s.chi_star {
        return Err(ScheduleViolation::RatioMismatch {
            claimed: s.chi_star.clone(),
            actual: realized,
        });
    }
    Ok(())
}

/// Exact comparison against repeating an optimal integral coloring for
/// `q*` periods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleComparison {
    pub t_star: Int,
    /// Slots the integral coloring needs for the same `q*` activations.
    pub t1_times_qstar: Int,
    pub preferable: bool,
}

pub fn compare_integer_schedule(
    frac: &Schedule,
    int_result: &IntegerResult,
) -> ScheduleComparison {
    let t1_times_qstar = Int::from(int_result.chi_int) * &frac.q_star;
    ScheduleComparison {
        preferable: frac.t_star < t1_times_qstar,
        t_star: frac.t_star.clone(),
        t1_times_qstar,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Deadline;
    use crate::chromatic::{solve_fractional, solve_integer};
    use crate::exact::{rat, rat_int, Dec};
    use crate::matching::enumerate_feasible_matchings;
    use crate::net::{generate_network, vertical_link_net, Network, PhysParams};
    use proptest::prelude::*;

    fn int(v: u32) -> Int {
        Int::from(v)
    }

    fn triangle() -> (Network, MatchingFamily, Schedule) {
        let net = vertical_link_net(&[0, 450, 900]);
        let family = enumerate_feasible_matchings(&net, 1000, Deadline::none()).unwrap();
        let frac = solve_fractional(&family).unwrap();
        let s = build_schedule(&frac, &family).unwrap();
        (net, family, s)
    }

    #[test]
    fn three_link_schedule_shape() {
        let (net, family, s) = triangle();
        assert_eq!(*s.t_star(), int(3));
        assert_eq!(*s.q_star(), int(2));
        assert_eq!(*s.chi_star(), rat(3, 2));
        let expected = vec![
            (LinkSet::from_indices(&[0, 1]).unwrap(), int(1)),
            (LinkSet::from_indices(&[0, 2]).unwrap(), int(1)),
            (LinkSet::from_indices(&[1, 2]).unwrap(), int(1)),
        ];
        assert_eq!(s.entries(), expected.as_slice());
        verify_schedule(&s, &net).unwrap();
        let int_result = solve_integer(&family).unwrap();
        let cmp = compare_integer_schedule(&s, &int_result);
        assert_eq!(cmp.t_star, int(3));
        assert_eq!(cmp.t1_times_qstar, int(4));
        assert!(cmp.preferable);
    }

    #[test]
    fn seven_link_schedule_matches_golden_text() {
        let family = crate::chromatic::tests::seven_link_family();
        let frac = solve_fractional(&family).unwrap();
        let s = build_schedule(&frac, &family).unwrap();
        assert_eq!(*s.t_star(), int(11));
        assert_eq!(*s.q_star(), int(2));
        let golden = "\
T 11 q 2
0 1
1 1
2 2
3 2
4 4
5 4
6 5
7 5
8 0 3
9 0 6
10 3 6
";
        let text = s.to_text(&[]).unwrap();
        assert_eq!(text, golden);
        let parsed = Schedule::from_text(&text).unwrap();
        assert_eq!(parsed, s);
        assert_eq!(parsed.to_text(&[]).unwrap(), golden);

        let int_result = solve_integer(&family).unwrap();
        let cmp = compare_integer_schedule(&s, &int_result);
        assert_eq!(cmp.t1_times_qstar, int(12));
        assert!(cmp.preferable);
    }

    #[test]
    fn ten_link_schedule_ties_integer() {
        let family = crate::chromatic::tests::ten_link_family();
        let frac = solve_fractional(&family).unwrap();
        let s = build_schedule(&frac, &family).unwrap();
        assert_eq!(*s.t_star(), int(12));
        assert_eq!(*s.q_star(), int(2));
        let int_result = solve_integer(&family).unwrap();
        assert_eq!(int_result.chi_int, 6);
        let cmp = compare_integer_schedule(&s, &int_result);
        assert_eq!(cmp.t_star, int(12));
        assert_eq!(cmp.t1_times_qstar, int(12));
        assert!(!cmp.preferable);
    }

    #[test]
    fn unit_support_gives_trivial_period() {
        let net = vertical_link_net(&[0]);
        let family = enumerate_feasible_matchings(&net, 10, Deadline::none()).unwrap();
        let frac = solve_fractional(&family).unwrap();
        let s = build_schedule(&frac, &family).unwrap();
        assert_eq!(*s.t_star(), int(1));
        assert_eq!(*s.q_star(), int(1));
        assert_eq!(s.to_text(&[]).unwrap(), "T 1 q 1\n0 0\n");
        verify_schedule(&s, &net).unwrap();
        let cmp = compare_integer_schedule(&s, &solve_integer(&family).unwrap());
        assert!(!cmp.preferable);
    }

    #[test]
    fn comments_survive_parsing_only() {
        let (_, _, s) = triangle();
        let text = s.to_text(&["made for a test".into()]).unwrap();
        assert!(text.starts_with("# made for a test\nT 3 q 2\n"));
        assert_eq!(Schedule::from_text(&text).unwrap(), s);
    }

    #[test]
    fn deleted_slot_breaks_link_counts() {
        let (net, _, mut s) = triangle();
        s.entries.remove(0);
        s.t_star -= Int::one();
        let v = verify_schedule(&s, &net).unwrap_err();
        assert_eq!(
            v,
            ScheduleViolation::WrongLinkCount {
                link: 0,
                count: int(1),
                expected: int(2),
            }
        );
    }

    #[test]
    fn node_sharing_slot_is_infeasible() {
        // Three collinear nodes 100 m apart: all three link pairs share a
        // node, so the schedule is the singleton rotation.
        let net = crate::net::collinear_link_net(&[0, 100, 200]);
        let family = enumerate_feasible_matchings(&net, 100, Deadline::none()).unwrap();
        assert_eq!(family.len(), net.n_links());
        let frac = solve_fractional(&family).unwrap();
        let mut s = build_schedule(&frac, &family).unwrap();
        verify_schedule(&s, &net).unwrap();
        let pair = LinkSet::from_indices(&[0, 1]).unwrap();
        s.entries[0].0 = pair;
        let v = verify_schedule(&s, &net).unwrap_err();
        assert_eq!(
            v,
            ScheduleViolation::InfeasibleSlot { slot: Int::zero(), links: pair }
        );
    }

    #[test]
    fn wrong_activation_count_is_caught() {
        let (net, _, mut s) = triangle();
        s.q_star = int(3);
        let v = verify_schedule(&s, &net).unwrap_err();
        assert_eq!(
            v,
            ScheduleViolation::WrongLinkCount {
                link: 0,
                count: int(2),
                expected: int(3),
            }
        );
    }

    #[test]
    fn corrupt_claims_are_caught() {
        let (net, _, s) = triangle();

        let mut bad = s.clone();
        bad.chi_star = rat_int(2);
        assert!(matches!(
            verify_schedule(&bad, &net).unwrap_err(),
            ScheduleViolation::RatioMismatch { .. }
        ));

        let mut bad = s.clone();
        bad.t_star += Int::one();
        assert!(matches!(
            verify_schedule(&bad, &net).unwrap_err(),
            ScheduleViolation::TotalMismatch { .. }
        ));

        let mut bad = s.clone();
        bad.q_star = Int::zero();
        assert!(matches!(
            verify_schedule(&bad, &net).unwrap_err(),
            ScheduleViolation::BadPeriod { .. }
        ));

        let mut bad = s;
        bad.entries[0].0 = LinkSet::from_indices(&[0, 9]).unwrap();
        assert!(matches!(
            verify_schedule(&bad, &net).unwrap_err(),
            ScheduleViolation::UnknownLink { link: 9, .. }
        ));
    }

    #[test]
    fn malformed_texts_are_rejected() {
        for (text, needle) in [
            ("", "missing T/q header"),
            ("T 2\n0 0\n1 0\n", "bad header"),
            ("T 0 q 1\n", "must be positive"),
            ("T x q 1\n0 0\n", "bad slot count"),
            ("T 2 q 1\n0 0\n", "declares 2 slots but 1"),
            ("T 1 q 1\n1 0\n", "slot index 1, expected 0"),
            ("T 1 q 1\n0\n", "slot 0 has no links"),
            ("T 1 q 1\n0 0 0\n", "listed twice"),
            ("T 1 q 1\n0 z\n", "bad link id"),
        ] {
            let err = Schedule::from_text(text).unwrap_err();
            let msg = err.to_string();
            assert!(msg.contains(needle), "{text:?} gave {msg:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        /// Built schedules always verify, realize chi* exactly, and
        /// round-trip through the text form.
        #[test]
        fn built_schedules_verify_and_round_trip(seed in 300u64..600) {
            let p = PhysParams::default();
            let net = generate_network(9, &Dec::from_int(1500), &p, seed).unwrap();
            prop_assume!(net.n_links() >= 1 && net.n_links() <= 12);
            let family =
                enumerate_feasible_matchings(&net, 1 << 20, Deadline::none()).unwrap();
            let frac = solve_fractional(&family).unwrap();
            let s = build_schedule(&frac, &family).unwrap();
            prop_assert!(verify_schedule(&s, &net).is_ok());
            prop_assert_eq!(
                Rat::new(s.t_star().clone(), s.q_star().clone()),
                frac.chi_star.clone()
            );
            let parsed = Schedule::from_text(&s.to_text(&[]).unwrap()).unwrap();
            prop_assert_eq!(parsed, s);
        }
    }
}
