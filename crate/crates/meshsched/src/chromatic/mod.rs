//! Fractional and integer chromatic indices of a matching family.
//!
//! The fractional index `chi*` is the optimum of the fractional cover LP:
//! assign each feasible matching a nonnegative weight so that every link's
//! matchings weigh exactly 1, minimizing total weight. The integer index
//! `chi'` restricts weights to {0, 1}, i.e. partitions the links into
//! matchings. Always `chi* <= chi'`; instances with strict inequality are
//! exactly the ones where fractional schedules beat integral ones.
//!
//! Everything here is exact. The LP is solved by column generation over
//! the family with certified termination (no matching prices negatively at
//! the end), the ILP by depth-first exact-cover branch and bound, and both
//! cross-check against an independent dual route ([`solve_dual_cutgen`])
//! and a k-fold cover search ([`chromatic_index_k`]).

mod cover;
mod dual;
mod master;

use crate::budget::Deadline;
use crate::exact::Rat;
use crate::matching::MatchingFamily;
use num_traits::{One, Zero};

pub use cover::chromatic_index_k;
pub use dual::{max_weight_feasible_matching, solve_dual_cutgen, SeparationMode};

/// Errors from the solvers. Budget expiry is an expected outcome on
/// oversized instances; `Internal` marks broken invariants.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("compute budget exceeded")]
    Budget,
    #[error("instance has no links")]
    EmptyInstance,
    #[error("solver invariant violated: {0}")]
    Internal(String),
}

/// Exact optimum of the fractional cover LP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalResult {
    /// The fractional chromatic index.
    pub chi_star: Rat,
    /// The optimal vertex: `(family position, weight)` for every matching
    /// with positive weight, ascending by position.
    pub support: Vec<(u32, Rat)>,
    /// Whether every support weight equals 1; such a vertex is already an
    /// optimal integer solution.
    pub all_unit: bool,
}

/// Exact optimum of the set-partitioning ILP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerResult {
    /// The integer chromatic index.
    pub chi_int: u32,
    /// Family positions of a minimum partition, ascending.
    pub partition: Vec<u32>,
}

/// Relation between the two indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// `chi* == chi'`: integral schedules are as good as fractional ones.
    Equal,
    /// `chi* < chi'`: fractional schedules strictly win.
    Strict,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Equal => "equal",
            Verdict::Strict => "strict",
        })
    }
}

/// Full classification of one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub chi_star: Rat,
    /// Absent when the LP vertex was integral and the ILP was skipped;
    /// the index then equals `chi_star` anyway.
    pub chi_int: Option<u32>,
    pub verdict: Verdict,
    /// False when the shortcut fired and no ILP ran.
    pub ilp_solved: bool,
}

/// Optimum of the dual program with its multipliers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualResult {
    /// Equals the fractional chromatic index by strong duality.
    pub z_star: Rat,
    /// One multiplier per link.
    pub y: Vec<Rat>,
    /// Constraints separated beyond the singleton seed.
    pub cuts_added: u32,
}

/// Solves the fractional cover LP exactly. See [`solve_fractional_with`].
pub fn solve_fractional(family: &MatchingFamily) -> Result<FractionalResult, SolveError> {
    solve_fractional_with(family, Deadline::none())
}

/// Solves the fractional cover LP by column generation: the master starts
/// from the singleton columns and repeatedly admits the most-violated
/// priced matching until an exact scan certifies that none remains. A
/// conservative integer prefilter skips the bulk of the family during
/// pricing without ever changing the outcome.
pub fn solve_fractional_with(
    family: &MatchingFamily,
    deadline: Deadline,
) -> Result<FractionalResult, SolveError> {
    if family.n_links() == 0 {
        return Err(SolveError::EmptyInstance);
    }
    let mut master = master::MasterLp::new(family);
    master.reoptimize(deadline)?;
    loop {
        let y = master.duals();
        match price(family, &y, deadline)? {
            Some(pos) => {
                debug_assert!(!master.is_active(pos));
                master.add_column(pos);
                master.reoptimize(deadline)?;
            }
            None => break,
        }
    }
    #[cfg(debug_assertions)]
    master.assert_cover_identity();
    let support = master.support();
    let all_unit = support.iter().all(|(_, x)| x.is_one());
    Ok(FractionalResult { chi_star: master.objective(), support, all_unit })
}

/// Fixed-point scale of the pricing prefilter.
const PRICE_SHIFT: u32 = 32;

/// Finds the family matching with the largest dual weight above 1, if
/// any. Per-link weights are rounded up into integers once, so a whole
/// matching can be discarded with integer adds when even its rounded-up
/// weight stays at or below 1; survivors are re-checked exactly. Should
/// any weight fall outside the fixed-point window the prefilter is
/// dropped for the round rather than bent.
fn price(
    family: &MatchingFamily,
    y: &[Rat],
    deadline: Deadline,
) -> Result<Option<u32>, SolveError> {
    use num_integer::Integer;
    let cap: i128 = 1 << 100;
    let y_up: Option<Vec<i128>> = y
        .iter()
        .map(|v| {
            let scaled = (v.numer() << PRICE_SHIFT).div_ceil(v.denom());
            i128::try_from(&scaled).ok().filter(|s| s.abs() <= cap)
        })
        .collect();
    let one = 1i128 << PRICE_SHIFT;
    let mut best: Option<(u32, Rat)> = None;
    for (pos, m) in family.matchings().iter().enumerate() {
        if pos & 0xffff == 0 && deadline.expired() {
            return Err(SolveError::Budget);
        }
        if let Some(up) = &y_up {
            let bound: i128 = m.iter().map(|e| up[e as usize]).sum();
            if bound <= one {
                continue;
            }
        }
        let mut w = Rat::zero();
        for e in m.iter() {
            w += &y[e as usize];
        }
        if w > Rat::one() && best.as_ref().map_or(true, |(_, bw)| w > *bw) {
            best = Some((pos as u32, w));
        }
    }
    Ok(best.map(|(pos, _)| pos))
}

/// Solves the set-partitioning ILP exactly. The fractional optimum is
/// computed first; its ceiling primes the branch-and-bound lower bound.
pub fn solve_integer(family: &MatchingFamily) -> Result<IntegerResult, SolveError> {
    solve_integer_with(family, None, Deadline::none())
}

/// As [`solve_integer`], with an optional known lower bound on the number
/// of matchings (skips the internal LP when given) and a deadline.
pub fn solve_integer_with(
    family: &MatchingFamily,
    floor: Option<u32>,
    deadline: Deadline,
) -> Result<IntegerResult, SolveError> {
    let floor = match floor {
        Some(f) => f,
        None => rat_ceil_u32(&solve_fractional_with(family, deadline)?.chi_star)?,
    };
    cover::solve_integer_bb(family, floor, deadline)
}

fn rat_ceil_u32(r: &Rat) -> Result<u32, SolveError> {
    let c = r.ceil();
    u32::try_from(c.numer()).map_err(|_| {
        SolveError::Internal(format!("chromatic index {r} out of integer range"))
    })
}

/// Classifies an instance. See [`classify_with`].
pub fn classify(family: &MatchingFamily) -> Result<Classification, SolveError> {
    classify_with(family, Deadline::none())
}

/// Classifies an instance: solve the LP; if its vertex is integral the
/// two indices coincide and the ILP is skipped; otherwise solve the ILP
/// and compare. The verdict is `Strict` exactly when `chi* < chi'`.
pub fn classify_with(
    family: &MatchingFamily,
    deadline: Deadline,
) -> Result<Classification, SolveError> {
    let frac = solve_fractional_with(family, deadline)?;
    classify_from(&frac, family, deadline)
}

/// The decision stage of [`classify_with`], starting from an already
/// solved LP. Callers that also need the fractional support use this to
/// avoid solving the LP twice.
pub fn classify_from(
    frac: &FractionalResult,
    family: &MatchingFamily,
    deadline: Deadline,
) -> Result<Classification, SolveError> {
    if frac.all_unit {
        debug_assert!(frac.chi_star.is_integer());
        return Ok(Classification {
            chi_star: frac.chi_star.clone(),
            chi_int: None,
            verdict: Verdict::Equal,
            ilp_solved: false,
        });
    }
    let floor = rat_ceil_u32(&frac.chi_star)?;
    let int = cover::solve_integer_bb(family, floor, deadline)?;
    let chi_int_rat = Rat::from_integer(int.chi_int.into());
    debug_assert!(frac.chi_star <= chi_int_rat);
    let verdict = if frac.chi_star < chi_int_rat {
        Verdict::Strict
    } else {
        Verdict::Equal
    };
    Ok(Classification {
        chi_star: frac.chi_star.clone(),
        chi_int: Some(int.chi_int),
        verdict,
        ilp_solved: true,
    })
}
