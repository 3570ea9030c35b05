//! Dense simplex for the restricted cut-covering LPs.
//!
//! Solves `min c·x  s.t.  A x >= b, x >= 0` with 0/1 rows and nonnegative
//! costs by running the standard tableau method on the dual
//! `max b·π  s.t.  Aᵀ π <= c, π >= 0`, whose all-slack basis is feasible
//! outright, so no phase-one is needed. The primal optimum is read off the
//! slack reduced costs, the duals off the basic π values. Bland's rule
//! throughout keeps the pivot sequence deterministic and cycle-free;
//! in rational mode every comparison is exact.

use crate::error::{Error, Result};
use crate::num::Weight;

pub struct TableauSolution<T> {
    /// Primal optimum, one value per column.
    pub x: Vec<T>,
    /// Objective value `c·x = b·π`.
    pub value: T,
    /// Dual value per row.
    pub duals: Vec<T>,
    pub pivots: u64,
}

const PIVOT_CAP: u64 = 200_000;

/// `a[i][j]` is the coefficient of column `j` in row `i` (following the cut
/// LPs, coefficients are 0/1). Requires `b >= 0` and `c >= 0`.
pub fn solve_cover_lp<T: Weight>(a: &[Vec<bool>], b: &[T], c: &[T]) -> Result<TableauSolution<T>> {
    let m = a.len();
    let nv = c.len();
    debug_assert_eq!(b.len(), m);
    debug_assert!(a.iter().all(|row| row.len() == nv));

    if m == 0 {
        return Ok(TableauSolution {
            x: vec![T::zero(); nv],
            value: T::zero(),
            duals: Vec::new(),
            pivots: 0,
        });
    }

    // Dual tableau: one row per primal column, variables are m pis then nv slacks.
    let width = m + nv;
    let mut tab: Vec<Vec<T>> = (0..nv)
        .map(|r| {
            let mut row = Vec::with_capacity(width + 1);
            for i in 0..m {
                row.push(if a[i][r] { T::one() } else { T::zero() });
            }
            for q in 0..nv {
                row.push(if q == r { T::one() } else { T::zero() });
            }
            row.push(c[r].clone());
            row
        })
        .collect();
    // Objective row holds z_j - c_j; starts at -b on the pi columns.
    let mut obj: Vec<T> = (0..width)
        .map(|j| if j < m { -b[j].clone() } else { T::zero() })
        .collect();
    let mut value = T::zero();
    let mut basis: Vec<usize> = (m..width).collect();

    let tol = T::tol_pivot();
    let mut pivots = 0u64;
    // Bland: always enter the first improving column.
    while let Some(enter) = (0..width).find(|&j| obj[j] < -tol.clone()) {
        // Ratio test; ties go to the smallest basic variable index.
        let mut leave: Option<usize> = None;
        let mut best: Option<T> = None;
        for r in 0..nv {
            if tab[r][enter] > tol {
                let ratio = tab[r][width].clone() / tab[r][enter].clone();
                let better = match &best {
                    None => true,
                    Some(cur) => {
                        ratio < *cur || (ratio == *cur && basis[r] < basis[leave.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    leave = Some(r);
                }
            }
        }
        let Some(pr) = leave else {
            return Err(Error::Numerical(
                "covering LP appears infeasible (dual unbounded)".into(),
            ));
        };

        pivots += 1;
        if pivots > PIVOT_CAP {
            return Err(Error::Numerical("simplex pivot cap exceeded".into()));
        }

        let pivot = tab[pr][enter].clone();
        for entry in tab[pr].iter_mut() {
            *entry = entry.clone() / pivot.clone();
        }
        for r in 0..nv {
            if r == pr {
                continue;
            }
            let factor = tab[r][enter].clone();
            if factor == T::zero() {
                continue;
            }
            for j in 0..=width {
                let delta = factor.clone() * tab[pr][j].clone();
                tab[r][j] = tab[r][j].clone() - delta;
            }
        }
        let factor = obj[enter].clone();
        for j in 0..width {
            let delta = factor.clone() * tab[pr][j].clone();
            obj[j] = obj[j].clone() - delta;
        }
        value = value - factor * tab[pr][width].clone();
        basis[pr] = enter;
    }

    // Primal solution: reduced costs of the slack columns; clamp pivot noise.
    let x: Vec<T> = (0..nv)
        .map(|q| {
            let v = obj[m + q].clone();
            if v < T::zero() {
                T::zero()
            } else {
                v
            }
        })
        .collect();
    let mut duals = vec![T::zero(); m];
    for (r, &var) in basis.iter().enumerate() {
        if var < m {
            let v = tab[r][width].clone();
            duals[var] = if v < T::zero() { T::zero() } else { v };
        }
    }
    Ok(TableauSolution {
        x,
        value,
        duals,
        pivots,
    })
}
