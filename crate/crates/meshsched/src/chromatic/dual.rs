//! The dual of the fractional cover program, solved by cutting planes.
//!
//! The dual maximizes `sum y_e` over free `y` subject to one constraint
//! per feasible matching, `sum over e in M of y_e <= 1`. Materializing
//! every constraint is exactly as hard as enumerating the family, so the
//! solver starts from the singleton constraints alone and separates: given
//! the current `y`, it looks for a maximum-weight feasible matching; a
//! weight above 1 is a violated constraint, which is added, and the LP is
//! re-solved. When no matching weighs more than 1 the iterate is feasible
//! for the full dual, hence optimal, and its value equals the fractional
//! chromatic index.
//!
//! Separation either scans a materialized family or searches the network
//! directly; the latter never needs the family at all.

use crate::budget::Deadline;
use crate::exact::Rat;
use crate::linkset::{LinkSet, MAX_LINKS};
use crate::matching::MatchingFamily;
use crate::net::Network;
use crate::simplex::{self, LpOutcome, LpProblem, LpRow, Relation, Sense, VarKind};
use num_traits::{One, Signed, Zero};

use super::{DualResult, SolveError};

/// Where the separation oracle looks for violated constraints.
pub enum SeparationMode<'a> {
    /// Exact scan of a materialized family.
    FamilyScan(&'a MatchingFamily),
    /// Branch-and-bound search over the network itself.
    NetworkSearch(&'a Network),
}

impl SeparationMode<'_> {
    pub fn n_links(&self) -> usize {
        match self {
            SeparationMode::FamilyScan(f) => f.n_links() as usize,
            SeparationMode::NetworkSearch(n) => n.n_links(),
        }
    }
}

/// A maximum-weight feasible matching under the given link weights. The
/// result may be the empty set with weight zero when no feasible matching
/// has positive weight; ties go to the first maximum in scan order, which
/// is fixed, so the result is deterministic.
pub fn max_weight_feasible_matching(
    mode: &SeparationMode<'_>,
    weights: &[Rat],
    deadline: Deadline,
) -> Result<(LinkSet, Rat), SolveError> {
    let n = mode.n_links();
    if weights.len() != n {
        return Err(SolveError::Internal(format!(
            "{} weights for {n} links",
            weights.len()
        )));
    }
    match mode {
        SeparationMode::FamilyScan(family) => {
            let mut best = (LinkSet::EMPTY, Rat::zero());
            for (i, &m) in family.matchings().iter().enumerate() {
                if i & 0xfff == 0 && deadline.expired() {
                    return Err(SolveError::Budget);
                }
                let mut w = Rat::zero();
                for e in m.iter() {
                    w += &weights[e as usize];
                }
                if w > best.1 {
                    best = (m, w);
                }
            }
            Ok(best)
        }
        SeparationMode::NetworkSearch(net) => {
            if n > MAX_LINKS as usize {
                return Err(SolveError::Internal(format!(
                    "{n} links exceed the search capacity"
                )));
            }
            // Links with non-positive weight never improve a matching:
            // dropping one keeps feasibility and does not lower the weight.
            let positive: Vec<u32> = (0..n as u32)
                .filter(|&e| weights[e as usize].is_positive())
                .collect();
            let mut suffix = vec![Rat::zero(); positive.len() + 1];
            for i in (0..positive.len()).rev() {
                suffix[i] = &suffix[i + 1] + &weights[positive[i] as usize];
            }
            let mut search = WeightSearch {
                net,
                weights,
                positive: &positive,
                suffix: &suffix,
                deadline,
                nodes: 0,
                best: (LinkSet::EMPTY, Rat::zero()),
            };
            search.extend(0, LinkSet::EMPTY, Rat::zero())?;
            Ok(search.best)
        }
    }
}

struct WeightSearch<'a> {
    net: &'a Network,
    weights: &'a [Rat],
    positive: &'a [u32],
    /// `suffix[i]` = total weight of `positive[i..]`.
    suffix: &'a [Rat],
    deadline: Deadline,
    nodes: u64,
    best: (LinkSet, Rat),
}

impl WeightSearch<'_> {
    fn extend(&mut self, from: usize, current: LinkSet, w: Rat) -> Result<(), SolveError> {
        for i in from..self.positive.len() {
            if self.nodes & 0xfff == 0 && self.deadline.expired() {
                return Err(SolveError::Budget);
            }
            self.nodes += 1;
            if &w + &self.suffix[i] <= self.best.1 {
                // Even taking every remaining positive link cannot beat
                // the incumbent.
                return Ok(());
            }
            let e = self.positive[i];
            let grown = current.with(e);
            if !self.net.is_feasible(grown).map_err(|err| {
                SolveError::Internal(format!("feasibility query failed: {err}"))
            })? {
                continue;
            }
            let w_grown = &w + &self.weights[e as usize];
            if w_grown > self.best.1 {
                self.best = (grown, w_grown.clone());
            }
            self.extend(i + 1, grown, w_grown)?;
        }
        Ok(())
    }
}

/// Solves the dual by cutting planes. Returns the optimum `z*`, the final
/// multipliers, and the number of constraints added beyond the singleton
/// seed. Constraints are never dropped. On return every feasible matching
/// satisfies its constraint, certified by one last exact separation call.
pub fn solve_dual_cutgen(
    mode: &SeparationMode<'_>,
    deadline: Deadline,
) -> Result<DualResult, SolveError> {
    let n = mode.n_links();
    if n == 0 {
        return Err(SolveError::EmptyInstance);
    }
    let mut cuts: Vec<LinkSet> = (0..n as u32).map(LinkSet::singleton).collect();
    loop {
        if deadline.expired() {
            return Err(SolveError::Budget);
        }
        let lp = LpProblem {
            sense: Sense::Maximize,
            objective: vec![Rat::one(); n],
            rows: cuts
                .iter()
                .map(|m| LpRow {
                    coeffs: (0..n as u32)
                        .map(|e| {
                            if m.contains(e) {
                                Rat::one()
                            } else {
                                Rat::zero()
                            }
                        })
                        .collect(),
                    relation: Relation::Le,
                    rhs: Rat::one(),
                })
                .collect(),
            vars: vec![VarKind::Free; n],
        };
        let outcome = simplex::solve(&lp)
            .map_err(|e| SolveError::Internal(format!("dual master: {e}")))?;
        let sol = match outcome {
            LpOutcome::Optimal(s) => s,
            other => {
                // y = 0 is always feasible and the singleton rows bound
                // the objective, so anything else is a defect.
                return Err(SolveError::Internal(format!(
                    "dual master reported {other:?}"
                )));
            }
        };
        let (violator, weight) =
            max_weight_feasible_matching(mode, &sol.primal, deadline)?;
        if weight > Rat::one() {
            debug_assert!(!cuts.contains(&violator));
            cuts.push(violator);
            continue;
        }
        return Ok(DualResult {
            z_star: sol.objective,
            y: sol.primal,
            cuts_added: (cuts.len() - n) as u32,
        });
    }
}
