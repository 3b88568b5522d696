//! Dense exact-rational primal simplex with Bland's pivot rule.
//!
//! Solves `maximize c.x  subject to  A.x <= b, x >= 0` with `b >= 0`, so the
//! all-slack basis is feasible and no phase-one is needed. Bland's rule
//! (smallest eligible index enters, smallest basic index breaks ratio ties)
//! guarantees termination under degeneracy and makes every run reproducible.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

/// `maximize objective . x` subject to `rows[i] . x <= rhs[i]`, `x >= 0`.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub num_vars: usize,
    /// Sparse rows: (column, coefficient) with nonnegative right-hand side.
    pub rows: Vec<(Vec<(usize, Rat)>, Rat)>,
    pub objective: Vec<(usize, Rat)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: Rat,
    pub values: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("negative right-hand side makes the slack basis infeasible")]
    NegativeRhs,
    #[error("objective is unbounded above")]
    Unbounded,
}

pub fn maximize(lp: &StandardLp) -> Result<LpSolution, LpError> {
    let m = lp.rows.len();
    let n = lp.num_vars;
    let cols = n + m + 1;
    // tableau rows 0..m are constraints (slack identity appended), row m is
    // the objective in reduced-cost form.
    let mut t: Vec<Vec<Rat>> = vec![vec![Rat::zero(); cols]; m + 1];
    let mut basis: Vec<usize> = (n..n + m).collect();
    for (i, (row, rhs)) in lp.rows.iter().enumerate() {
        if rhs.is_negative() {
            return Err(LpError::NegativeRhs);
        }
        for (j, c) in row {
            t[i][*j] = t[i][*j].clone() + c.clone();
        }
        t[i][n + i] = Rat::one();
        t[i][cols - 1] = rhs.clone();
    }
    for (j, c) in &lp.objective {
        t[m][*j] = -c.clone();
    }

    loop {
        // Bland: smallest column with a negative reduced cost enters.
        let Some(enter) = (0..cols - 1).find(|j| t[m][*j].is_negative()) else {
            break;
        };
        // Ratio test; smallest basic variable index breaks ties.
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let ratio = t[i][cols - 1].clone() / t[i][enter].clone();
                match &leave {
                    None => leave = Some((i, ratio)),
                    Some((best_i, best)) => {
                        if ratio < *best || (ratio == *best && basis[i] < basis[*best_i]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((pivot_row, _)) = leave else {
            return Err(LpError::Unbounded);
        };
        // Pivot.
        let pivot = t[pivot_row][enter].clone();
        for v in t[pivot_row].iter_mut() {
            *v = v.clone() / pivot.clone();
        }
        for i in 0..=m {
            if i == pivot_row || t[i][enter].is_zero() {
                continue;
            }
            let factor = t[i][enter].clone();
            for j in 0..cols {
                let delta = factor.clone() * t[pivot_row][j].clone();
                t[i][j] = t[i][j].clone() - delta;
            }
        }
        basis[pivot_row] = enter;
    }

    let mut values = vec![Rat::zero(); n];
    for (i, b) in basis.iter().enumerate() {
        if *b < n {
            values[*b] = t[i][cols - 1].clone();
        }
    }
    Ok(LpSolution {
        value: t[m][cols - 1].clone(),
        values,
    })
}
