//! Exact two-phase primal simplex over arbitrary-precision rationals.
//!
//! Pivot selection follows Bland's rule (lowest eligible index enters, ties
//! in the ratio test break toward the lowest basis index), so the solver
//! terminates on degenerate programs and, given identical input, always
//! visits the identical pivot sequence. Optimal dual values are recovered
//! from the reduced costs of the phase-1 artificial columns.
//!
//! All arithmetic is rational; results are exact, never approximate.

use crate::exact::Rat;
use num_traits::{Signed, Zero};

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Row relation. `Ge` rows are not offered; callers negate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

/// Variable domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    NonNegative,
    Free,
}

/// One linear constraint.
#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<Rat>,
    pub relation: Relation,
    pub rhs: Rat,
}

/// A linear program in dense form.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<Rat>,
    pub rows: Vec<LpRow>,
    pub vars: Vec<VarKind>,
}

/// Exact optimum with primal and dual values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub objective: Rat,
    /// One value per problem variable, in input order.
    pub primal: Vec<Rat>,
    /// One value per problem row, in input order. Satisfies
    /// `objective == dual . rhs` (strong duality).
    pub dual: Vec<Rat>,
}

/// Solver verdict. Infeasibility and unboundedness are outcomes, not errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

/// Structural errors in the problem statement.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("row {row} has {got} coefficients, expected {expected}")]
    RowLength { row: usize, got: usize, expected: usize },
    #[error("vars has length {got}, expected {expected}")]
    VarsLength { got: usize, expected: usize },
}

struct Std {
    /// Columns of the standardized matrix, by rows: `a[r][j]`.
    a: Vec<Vec<Rat>>,
    b: Vec<Rat>,
    c: Vec<Rat>,
    /// Sign applied to each original row during standardization.
    row_sign: Vec<i8>,
    /// For each original variable, its standard column(s): `(plus, minus)`.
    var_cols: Vec<(usize, Option<usize>)>,
    n_cols: usize,
}

fn standardize(p: &LpProblem) -> Std {
    let n = p.objective.len();
    let m = p.rows.len();
    let mut var_cols = Vec::with_capacity(n);
    let mut n_cols = 0usize;
    for kind in &p.vars {
        match kind {
            VarKind::NonNegative => {
                var_cols.push((n_cols, None));
                n_cols += 1;
            }
            VarKind::Free => {
                var_cols.push((n_cols, Some(n_cols + 1)));
                n_cols += 2;
            }
        }
    }
    let slack_base = n_cols;
    let n_slacks = p.rows.iter().filter(|r| r.relation == Relation::Le).count();
    n_cols += n_slacks;

    let negate = p.sense == Sense::Maximize;
    let mut c = vec![Rat::zero(); n_cols];
    for (j, kind_cols) in var_cols.iter().enumerate() {
        let cj = if negate { -&p.objective[j] } else { p.objective[j].clone() };
        c[kind_cols.0] = cj.clone();
        if let Some(minus) = kind_cols.1 {
            c[minus] = -cj;
        }
    }

    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut row_sign = Vec::with_capacity(m);
    let mut next_slack = slack_base;
    for row in &p.rows {
        let mut coeffs = vec![Rat::zero(); n_cols];
        for (j, v) in row.coeffs.iter().enumerate() {
            let (plus, minus) = var_cols[j];
            coeffs[plus] = v.clone();
            if let Some(mi) = minus {
                coeffs[mi] = -v.clone();
            }
        }
        if row.relation == Relation::Le {
            coeffs[next_slack] = Rat::from_integer(1.into());
            next_slack += 1;
        }
        let sign = if row.rhs.is_negative() { -1i8 } else { 1 };
        if sign < 0 {
            for v in coeffs.iter_mut() {
                *v = -v.clone();
            }
            b.push(-row.rhs.clone());
        } else {
            b.push(row.rhs.clone());
        }
        row_sign.push(sign);
        a.push(coeffs);
    }

    Std { a, b, c, row_sign, var_cols, n_cols }
}

struct Tableau {
    /// `m x (n_cols + m + 1)`: structural columns, artificial columns, rhs.
    rows: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    /// Original row index behind each tableau row (rows can be dropped).
    row_origin: Vec<usize>,
    n_cols: usize,
    n_art: usize,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.n_cols + self.n_art
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j].clone();
        debug_assert!(!piv.is_zero());
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = &*v / &piv;
            }
        }
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][j].clone();
            if factor.is_zero() {
                continue;
            }
            for k in 0..self.rows[i].len() {
                if !self.rows[r][k].is_zero() {
                    let delta = &self.rows[r][k] * &factor;
                    self.rows[i][k] = &self.rows[i][k] - delta;
                }
            }
        }
        self.basis[r] = j;
    }

    /// Multipliers `y = c_B B^-1`, one per surviving tableau row, read off
    /// the artificial columns.
    fn multipliers(&self, cost: &dyn Fn(usize) -> Rat) -> Vec<Rat> {
        let art_base = self.n_cols;
        (0..self.rows.len())
            .map(|i| {
                let col = art_base + self.row_origin[i];
                let mut y = Rat::zero();
                for (r, row) in self.rows.iter().enumerate() {
                    let cb = cost(self.basis[r]);
                    if !cb.is_zero() && !row[col].is_zero() {
                        y += cb * &row[col];
                    }
                }
                y
            })
            .collect()
    }

}

fn reduced_cost(
    std: &Std,
    t: &Tableau,
    y: &[Rat],
    cost: &dyn Fn(usize) -> Rat,
    j: usize,
) -> Rat {
    let mut rc = cost(j);
    if j < std.n_cols {
        for (i, &orig) in t.row_origin.iter().enumerate() {
            let aij = &std.a[orig][j];
            if !aij.is_zero() {
                rc -= &y[i] * aij;
            }
        }
    } else {
        let owner = j - std.n_cols;
        if let Some(i) = t.row_origin.iter().position(|&o| o == owner) {
            rc -= y[i].clone();
        }
    }
    rc
}

fn bland(
    std: &Std,
    t: &mut Tableau,
    cost: &dyn Fn(usize) -> Rat,
    allow_artificial_entering: bool,
) -> bool {
    let rhs = t.rhs_col();
    loop {
        let y = t.multipliers(cost);
        let limit = if allow_artificial_entering {
            std.n_cols + t.n_art
        } else {
            std.n_cols
        };
        let mut entering = None;
        for j in 0..limit {
            if t.basis.contains(&j) {
                continue;
            }
            if reduced_cost(std, t, &y, cost, j).is_negative() {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else { return true };
        let mut leave: Option<(usize, Rat)> = None;
        for r in 0..t.rows.len() {
            if t.rows[r][j].is_positive() {
                let ratio = &t.rows[r][rhs] / &t.rows[r][j];
                let better = match &leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < *lratio || (ratio == *lratio && t.basis[r] < t.basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else { return false };
        t.pivot(r, j);
    }
}

/// Solves the program exactly. Dimension errors are the only `Err` path;
/// infeasibility and unboundedness are reported through [`LpOutcome`].
pub fn solve(p: &LpProblem) -> Result<LpOutcome, LpError> {
    let n = p.objective.len();
    if p.vars.len() != n {
        return Err(LpError::VarsLength { got: p.vars.len(), expected: n });
    }
    for (i, row) in p.rows.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(LpError::RowLength { row: i, got: row.coeffs.len(), expected: n });
        }
    }

    let std = standardize(p);
    let m = p.rows.len();
    let mut t = Tableau {
        rows: (0..m)
            .map(|r| {
                let mut row = Vec::with_capacity(std.n_cols + m + 1);
                row.extend(std.a[r].iter().cloned());
                for i in 0..m {
                    row.push(if i == r {
                        Rat::from_integer(1.into())
                    } else {
                        Rat::zero()
                    });
                }
                row.push(std.b[r].clone());
                row
            })
            .collect(),
        basis: (0..m).map(|r| std.n_cols + r).collect(),
        row_origin: (0..m).collect(),
        n_cols: std.n_cols,
        n_art: m,
    };

    // Phase 1: drive the artificial variables to zero.
    let n_cols = std.n_cols;
    let phase1_cost = move |j: usize| {
        if j >= n_cols {
            Rat::from_integer(1.into())
        } else {
            Rat::zero()
        }
    };
    let ok = bland(&std, &mut t, &phase1_cost, true);
    debug_assert!(ok, "phase 1 is bounded below by zero");
    let rhs = t.rhs_col();
    let mut infeas = Rat::zero();
    for (r, &bvar) in t.basis.iter().enumerate() {
        if bvar >= std.n_cols {
            infeas += &t.rows[r][rhs];
        }
    }
    if !infeas.is_zero() {
        return Ok(LpOutcome::Infeasible);
    }

    // Remove artificials from the basis: pivot in a structural column where
    // one exists, otherwise the row is redundant and is dropped.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= std.n_cols {
            let col = (0..std.n_cols)
                .find(|&j| !t.basis.contains(&j) && !t.rows[r][j].is_zero());
            match col {
                Some(j) => t.pivot(r, j),
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                    t.row_origin.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2 over the true costs; artificials stay barred at level zero.
    let c2 = std.c.clone();
    let phase2_cost = move |j: usize| {
        if j < c2.len() {
            c2[j].clone()
        } else {
            Rat::zero()
        }
    };
    if !bland(&std, &mut t, &phase2_cost, false) {
        return Ok(LpOutcome::Unbounded);
    }

    // Extract primal values in standardized coordinates.
    let rhs = t.rhs_col();
    let mut x_std = vec![Rat::zero(); std.n_cols];
    for (r, &bvar) in t.basis.iter().enumerate() {
        if bvar < std.n_cols {
            x_std[bvar] = t.rows[r][rhs].clone();
        }
    }
    let mut primal = Vec::with_capacity(n);
    for &(plus, minus) in &std.var_cols {
        let v = match minus {
            Some(mi) => &x_std[plus] - &x_std[mi],
            None => x_std[plus].clone(),
        };
        primal.push(v);
    }

    let mut objective = Rat::zero();
    for (j, v) in primal.iter().enumerate() {
        if !v.is_zero() {
            objective += &p.objective[j] * v;
        }
    }

    // Duals: multipliers per surviving row, zero on dropped (redundant)
    // rows, undone for row flips and the maximize negation.
    let y_surv = t.multipliers(&phase2_cost);
    let mut dual = vec![Rat::zero(); m];
    for (i, &orig) in t.row_origin.iter().enumerate() {
        let mut y = y_surv[i].clone();
        if std.row_sign[orig] < 0 {
            y = -y;
        }
        if p.sense == Sense::Maximize {
            y = -y;
        }
        dual[orig] = y;
    }

    if cfg!(debug_assertions) {
        let mut yb = Rat::zero();
        for (i, row) in p.rows.iter().enumerate() {
            yb += &dual[i] * &row.rhs;
            let mut lhs = Rat::zero();
            for (j, v) in row.coeffs.iter().enumerate() {
                lhs += v * &primal[j];
            }
            match row.relation {
                Relation::Eq => debug_assert_eq!(lhs, row.rhs, "row {i} violated"),
                Relation::Le => debug_assert!(lhs <= row.rhs, "row {i} violated"),
            }
        }
        debug_assert_eq!(yb, objective, "strong duality check failed");
    }

    Ok(LpOutcome::Optimal(LpSolution { objective, primal, dual }))
}
