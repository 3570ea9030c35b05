//! Scalar abstraction for solver arithmetic.
//!
//! The LP, cut, and assembly machinery is generic over [`Weight`] so that a
//! whole solve can run either in `f64` (fast, guarded by small tolerances) or
//! in exact rationals (slow, every tolerance collapses to zero). Instance
//! costs are stored as doubles; converting a double into a rational is exact,
//! so the rational mode reproduces the same instance without rounding.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Field-like scalar used throughout the solver.
pub trait Weight:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// True when arithmetic is exact and all tolerances are zero.
    const EXACT: bool;

    fn from_f64(v: f64) -> Self;
    fn from_int(v: i64) -> Self;
    /// The exact fraction `num/den`.
    fn ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;

    /// Feasibility slack for LP constraints (`1e-9`, or zero in exact mode).
    fn tol_feas() -> Self;
    /// Narrow-cut threshold slack: a cut is narrow iff its value is below
    /// `2 - tol_narrow()`.
    fn tol_narrow() -> Self;
    /// Threshold below which a tableau or residual entry counts as zero.
    fn tol_pivot() -> Self;

    fn abs(&self) -> Self;
}

impl Weight for f64 {
    const EXACT: bool = false;

    fn from_f64(v: f64) -> Self {
        v
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tol_feas() -> Self {
        1e-9
    }

    fn tol_narrow() -> Self {
        1e-9
    }

    fn tol_pivot() -> Self {
        1e-12
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl Weight for BigRational {
    const EXACT: bool = true;

    fn from_f64(v: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(v).expect("finite cost required")
    }

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tol_feas() -> Self {
        Self::zero()
    }

    fn tol_narrow() -> Self {
        Self::zero()
    }

    fn tol_pivot() -> Self {
        Self::zero()
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// Dense symmetric cost matrix converted once into the working scalar type.
#[derive(Clone, Debug)]
pub struct Costs<T> {
    n: usize,
    c: Vec<T>,
}

impl<T: Weight> Costs<T> {
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Self {
        let n = matrix.len();
        let mut c = Vec::with_capacity(n * n);
        for row in matrix {
            debug_assert_eq!(row.len(), n);
            c.extend(row.iter().map(|&v| T::from_f64(v)));
        }
        Costs { n, c }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> &T {
        &self.c[u * self.n + v]
    }

    /// Sum of edge costs for an explicit edge list.
    pub fn edge_sum(&self, edges: &[(usize, usize)]) -> T {
        edges
            .iter()
            .fold(T::zero(), |acc, &(u, v)| acc + self.get(u, v).clone())
    }
}

/// Relative closeness test used by invariant checks: `|a-b| <= tol * max(1, |a|, |b|)`.
pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}
