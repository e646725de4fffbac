//! Restricted-master LP for the fractional cover program.
//!
//! The program is `min sum x_M` over `x >= 0` subject to one equality per
//! link, `sum over matchings containing e of x_M = 1`. Columns are
//! matchings; the master keeps only an active subset and grows it by
//! pricing over the full family.
//!
//! The singleton columns form a permanent identity block, so the master
//! never needs artificial variables: the initial basis is the singletons,
//! and the tableau columns of the singletons always hold the current basis
//! inverse. After a column is appended the previous optimum stays primal
//! feasible, so reoptimization continues from it instead of restarting.
//! Pivoting uses Bland's rule throughout; everything is exact.

use crate::budget::Deadline;
use crate::exact::Rat;
use crate::linkset::LinkSet;
use crate::matching::MatchingFamily;
use num_traits::{One, Signed, Zero};

use super::SolveError;

pub(super) struct MasterLp<'f> {
    family: &'f MatchingFamily,
    n: usize,
    /// Family position of each active column.
    active: Vec<u32>,
    active_set: Vec<bool>,
    /// `n` rows by `active.len() + 1` columns; the last column is the rhs.
    rows: Vec<Vec<Rat>>,
    /// Active-column index held by each row.
    basis: Vec<usize>,
}

impl<'f> MasterLp<'f> {
    /// Starts from the all-singleton basis, which is feasible outright.
    pub fn new(family: &'f MatchingFamily) -> MasterLp<'f> {
        let n = family.n_links() as usize;
        let mut rows = Vec::with_capacity(n);
        for r in 0..n {
            let mut row = vec![Rat::zero(); n + 1];
            row[r] = Rat::one();
            row[n] = Rat::one();
            rows.push(row);
        }
        let mut active_set = vec![false; family.len()];
        for pos in 0..n {
            active_set[pos] = true;
        }
        MasterLp {
            family,
            n,
            active: (0..n as u32).collect(),
            active_set,
            rows,
            basis: (0..n).collect(),
        }
    }

    fn rhs_col(&self) -> usize {
        self.active.len()
    }

    /// Duals `y_e`, one per link: with unit costs on every column,
    /// `y = 1^T B^-1`, read off the singleton columns.
    pub fn duals(&self) -> Vec<Rat> {
        (0..self.n)
            .map(|e| self.rows.iter().map(|row| &row[e]).sum())
            .collect()
    }

    pub fn objective(&self) -> Rat {
        let rhs = self.rhs_col();
        self.rows.iter().map(|row| &row[rhs]).sum()
    }

    /// Support of the current vertex as `(family position, weight)` with
    /// positive weights, ascending by position.
    pub fn support(&self) -> Vec<(u32, Rat)> {
        let rhs = self.rhs_col();
        let mut out: Vec<(u32, Rat)> = self
            .basis
            .iter()
            .enumerate()
            .filter(|&(r, _)| self.rows[r][rhs].is_positive())
            .map(|(r, &col)| (self.active[col], self.rows[r][rhs].clone()))
            .collect();
        out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn is_active(&self, pos: u32) -> bool {
        self.active_set[pos as usize]
    }

    /// Appends the column of a family matching. Its tableau image is the
    /// sum of the singleton columns of its members.
    pub fn add_column(&mut self, pos: u32) {
        debug_assert!(!self.active_set[pos as usize]);
        let members = self.family.get(pos);
        let rhs = self.rhs_col();
        for row in self.rows.iter_mut() {
            let mut v = Rat::zero();
            for e in members.iter() {
                if !row[e as usize].is_zero() {
                    v += &row[e as usize];
                }
            }
            row.insert(rhs, v);
        }
        self.active.push(pos);
        self.active_set[pos as usize] = true;
    }

    /// Reduced cost `1 - sum over members of y_e` of an arbitrary family
    /// matching under the current duals.
    fn reduced_cost(&self, y: &[Rat], members: LinkSet) -> Rat {
        let mut rc = Rat::one();
        for e in members.iter() {
            rc -= &y[e as usize];
        }
        rc
    }

    /// Primal simplex with Bland's rule, from the current basis.
    pub fn reoptimize(&mut self, deadline: Deadline) -> Result<(), SolveError> {
        let mut pivots = 0u64;
        loop {
            if pivots & 0xf == 0 && deadline.expired() {
                return Err(SolveError::Budget);
            }
            pivots += 1;
            let y = self.duals();
            let mut entering = None;
            for (col, &pos) in self.active.iter().enumerate() {
                if self.basis.contains(&col) {
                    continue;
                }
                if self
                    .reduced_cost(&y, self.family.get(pos))
                    .is_negative()
                {
                    entering = Some(col);
                    break;
                }
            }
            let Some(j) = entering else { return Ok(()) };
            let rhs = self.rhs_col();
            let mut leave: Option<(usize, Rat)> = None;
            for r in 0..self.n {
                if self.rows[r][j].is_positive() {
                    let ratio = &self.rows[r][rhs] / &self.rows[r][j];
                    let better = match &leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < *lratio
                                || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                // The objective is bounded below by zero; a missing leaving
                // row would mean the equality system admits unbounded
                // decrease, which cannot happen here.
                return Err(SolveError::Internal(
                    "cover master reported unbounded".into(),
                ));
            };
            self.pivot(r, j);
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j].clone();
        debug_assert!(piv.is_positive());
        if !piv.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v = &*v / &piv;
                }
            }
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[j].is_zero() {
                continue;
            }
            let factor = row[j].clone();
            for (k, v) in row.iter_mut().enumerate() {
                if !pivot_row[k].is_zero() {
                    let delta = &pivot_row[k] * &factor;
                    *v = &*v - delta;
                }
            }
        }
        self.basis[r] = j;
    }

    /// Exactness self-check: the support satisfies every cover equality.
    #[cfg(debug_assertions)]
    pub fn assert_cover_identity(&self) {
        let support = self.support();
        for e in 0..self.n as u32 {
            let total: Rat = support
                .iter()
                .filter(|(pos, _)| self.family.get(*pos).contains(e))
                .map(|(_, x)| x)
                .sum();
            debug_assert!(total.is_one(), "link {e} covered {total}, not 1");
        }
    }
}
