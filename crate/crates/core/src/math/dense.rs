//! Fixed-size dense matrices (at most 8×8), an LU solver, and an SVD-based
//! nullspace.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::Real;

/// Largest dimension the dense kernel is meant for.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LinalgError {
    /// Partial pivoting met a pivot below the singularity threshold.
    #[error("singular matrix: pivot {pivot:e} at column {column}")]
    SingularMatrix { pivot: f64, column: usize },
}

/// Pivot magnitude under which a system is reported singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Relative singular-value threshold used to decide numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Row-major `R × C` matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix<T, const R: usize, const C: usize> {
    pub rows: [[T; C]; R],
}

impl<T: Real, const R: usize, const C: usize> Default for Matrix<T, R, C> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<T: Real, const R: usize, const C: usize> Matrix<T, R, C> {
    pub fn zeros() -> Self {
        Self { rows: [[T::zero(); C]; R] }
    }

    pub fn from_rows(rows: [[T; C]; R]) -> Self {
        Self { rows }
    }

    pub fn row(&self, i: usize) -> [T; C] {
        self.rows[i]
    }

    pub fn col(&self, j: usize) -> [T; R] {
        std::array::from_fn(|i| self.rows[i][j])
    }

    pub fn set_col(&mut self, j: usize, v: [T; R]) {
        for (i, x) in v.into_iter().enumerate() {
            self.rows[i][j] = x;
        }
    }

    pub fn transpose(&self) -> Matrix<T, C, R> {
        Matrix { rows: std::array::from_fn(|j| self.col(j)) }
    }

    pub fn mul_vec(&self, v: &[T; C]) -> [T; R] {
        std::array::from_fn(|i| vecn::dot(&self.rows[i], v))
    }

    pub fn mul_mat<const K: usize>(&self, o: &Matrix<T, C, K>) -> Matrix<T, R, K> {
        let mut out = Matrix::<T, R, K>::zeros();
        for i in 0..R {
            for j in 0..K {
                out.rows[i][j] = (0..C).map(|k| self.rows[i][k] * o.rows[k][j]).sum();
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        out.rows.iter_mut().flatten().for_each(|x| *x *= s);
        out
    }

    pub fn norm_inf(&self) -> T {
        self.rows.iter().flatten().fold(T::zero(), |a, x| a.max(x.abs()))
    }

    /// Induced 1-norm (max absolute column sum).
    pub fn norm_1(&self) -> T {
        (0..C)
            .map(|j| (0..R).map(|i| self.rows[i][j].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().flatten().all(|x| x.is_finite())
    }
}

impl<T: Real, const N: usize> Matrix<T, N, N> {
    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.rows[i][i] = T::one();
        }
        m
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (0..N).all(|i| (0..N).all(|j| (self.rows[i][j] - self.rows[j][i]).abs() <= tol))
    }

    /// Cholesky test for positive definiteness of a symmetric matrix.
    pub fn is_positive_definite(&self) -> bool {
        let mut l = Self::zeros();
        for j in 0..N {
            let mut d = self.rows[j][j];
            for k in 0..j {
                d -= l.rows[j][k] * l.rows[j][k];
            }
            if !(d > T::zero()) {
                return false;
            }
            let d = d.sqrt();
            l.rows[j][j] = d;
            for i in j + 1..N {
                let mut s = self.rows[i][j];
                for k in 0..j {
                    s -= l.rows[i][k] * l.rows[j][k];
                }
                l.rows[i][j] = s / d;
            }
        }
        true
    }

    /// `vᵀ M v`.
    pub fn quadratic_form(&self, v: &[T; N]) -> T {
        vecn::dot(v, &self.mul_vec(v))
    }
}

impl<T, const R: usize, const C: usize> Index<(usize, usize)> for Matrix<T, R, C> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.rows[i][j]
    }
}

impl<T, const R: usize, const C: usize> IndexMut<(usize, usize)> for Matrix<T, R, C> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.rows[i][j]
    }
}

/// Helpers for plain `[T; N]` vectors.
pub mod vecn {
    use crate::Real;

    pub fn dot<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> T {
        a.iter().zip(b).map(|(x, y)| *x * *y).sum()
    }

    pub fn norm<T: Real, const N: usize>(a: &[T; N]) -> T {
        dot(a, a).sqrt()
    }

    pub fn norm_inf<T: Real, const N: usize>(a: &[T; N]) -> T {
        a.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn add<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> [T; N] {
        std::array::from_fn(|i| a[i] + b[i])
    }

    pub fn sub<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> [T; N] {
        std::array::from_fn(|i| a[i] - b[i])
    }

    pub fn scale<T: Real, const N: usize>(a: &[T; N], s: T) -> [T; N] {
        a.map(|x| x * s)
    }

    /// `a + s·b`.
    pub fn axpy<T: Real, const N: usize>(a: &[T; N], s: T, b: &[T; N]) -> [T; N] {
        std::array::from_fn(|i| a[i] + s * b[i])
    }

    pub fn min<T: Real, const N: usize>(a: &[T; N]) -> T {
        a.iter().copied().fold(T::infinity(), T::min)
    }

    /// Index of the smallest entry, lowest index on ties.
    pub fn argmin<T: Real, const N: usize>(a: &[T; N]) -> usize {
        let mut best = 0;
        for i in 1..N {
            if a[i] < a[best] {
                best = i;
            }
        }
        best
    }

    pub fn unit<T: Real, const N: usize>(k: usize) -> [T; N] {
        std::array::from_fn(|i| if i == k { T::one() } else { T::zero() })
    }

    pub fn all_finite<T: Real, const N: usize>(a: &[T; N]) -> bool {
        a.iter().all(|x| x.is_finite())
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone, Copy)]
pub struct Lu<T, const N: usize> {
    lu: Matrix<T, N, N>,
    perm: [usize; N],
    norm_1: T,
}

impl<T: Real, const N: usize> Lu<T, N> {
    pub fn factor(a: &Matrix<T, N, N>) -> Result<Self, LinalgError> {
        let threshold = T::lit(SINGULAR_PIVOT);
        let mut lu = *a;
        let mut perm: [usize; N] = std::array::from_fn(|i| i);
        for k in 0..N {
            let mut p = k;
            for i in k + 1..N {
                if lu.rows[i][k].abs() > lu.rows[p][k].abs() {
                    p = i;
                }
            }
            let pivot = lu.rows[p][k];
            if !(pivot.abs() >= threshold) {
                return Err(LinalgError::SingularMatrix {
                    pivot: pivot.to_f64().unwrap_or(f64::NAN),
                    column: k,
                });
            }
            lu.rows.swap(k, p);
            perm.swap(k, p);
            for i in k + 1..N {
                let f = lu.rows[i][k] / pivot;
                lu.rows[i][k] = f;
                for j in k + 1..N {
                    let u = lu.rows[k][j];
                    lu.rows[i][j] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm, norm_1: a.norm_1() })
    }

    pub fn solve(&self, b: &[T; N]) -> [T; N] {
        let mut x: [T; N] = std::array::from_fn(|i| b[self.perm[i]]);
        for i in 0..N {
            for j in 0..i {
                let l = self.lu.rows[i][j];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..N).rev() {
            for j in i + 1..N {
                let u = self.lu.rows[i][j];
                x[i] = x[i] - u * x[j];
            }
            x[i] = x[i] / self.lu.rows[i][i];
        }
        x
    }

    /// `‖A‖₁ ‖A⁻¹‖₁`, with the inverse norm formed column by column.
    pub fn condition_estimate(&self) -> T {
        let inv_norm = (0..N)
            .map(|k| {
                let col = self.solve(&vecn::unit(k));
                col.iter().map(|x| x.abs()).sum::<T>()
            })
            .fold(T::zero(), T::max);
        self.norm_1 * inv_norm
    }
}

/// Solution of a square dense system together with its condition estimate.
#[derive(Debug, Clone, Copy)]
pub struct Solution<T, const N: usize> {
    pub x: [T; N],
    pub condition: T,
}

/// Solves `A x = b` for `N ≤ 8`.
pub fn solve_linear<T: Real, const N: usize>(
    a: &Matrix<T, N, N>,
    b: &[T; N],
) -> Result<Solution<T, N>, LinalgError> {
    debug_assert!(N <= MAX_DIM);
    let lu = Lu::factor(a)?;
    Ok(Solution { x: lu.solve(b), condition: lu.condition_estimate() })
}

/// Orthonormal basis of `{n : C n = 0}` for the stacked rows of `C`.
///
/// Uses a one-sided Jacobi SVD of `C`; singular values at or below
/// `RANK_TOLERANCE · σ_max` count as zero. An empty `C` yields the
/// standard basis.
pub fn nullspace<T: Real, const N: usize>(rows: &[[T; N]]) -> Vec<[T; N]> {
    let (_, v, sigma) = jacobi_svd(rows);
    let sigma_max = sigma.iter().copied().fold(T::zero(), T::max);
    let cutoff = T::lit(RANK_TOLERANCE) * sigma_max;
    (0..N)
        .filter(|&j| sigma_max == T::zero() || sigma[j] <= cutoff)
        .map(|j| v.col(j))
        .collect()
}

/// Numerical rank under the same threshold `nullspace` uses.
pub fn rank<T: Real, const N: usize>(rows: &[[T; N]]) -> usize {
    N - nullspace(rows).len()
}

/// One-sided (Hestenes) Jacobi: returns `(C V, V, σ)` where the columns of
/// `C V` are mutually orthogonal with norms `σ`.
fn jacobi_svd<T: Real, const N: usize>(rows: &[[T; N]]) -> (Vec<[T; N]>, Matrix<T, N, N>, [T; N]) {
    let mut a: Vec<[T; N]> = rows.to_vec();
    let mut v = Matrix::<T, N, N>::identity();
    let eps = T::epsilon();
    // Columns this small are numerically zero and need no further rotation.
    let frob: T = rows.iter().flat_map(|r| r.iter()).map(|&x| x * x).sum();
    let tiny = eps * eps * frob;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..N {
            for q in p + 1..N {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for r in &a {
                    alpha += r[p] * r[p];
                    beta += r[q] * r[q];
                    gamma += r[p] * r[q];
                }
                if alpha <= tiny || beta <= tiny || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::two() * gamma);
                let t = zeta.sgn_nonzero() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for r in a.iter_mut() {
                    let (x, y) = (r[p], r[q]);
                    r[p] = c * x - s * y;
                    r[q] = s * x + c * y;
                }
                for r in v.rows.iter_mut() {
                    let (x, y) = (r[p], r[q]);
                    r[p] = c * x - s * y;
                    r[q] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = std::array::from_fn(|j| a.iter().map(|r| r[j] * r[j]).sum::<T>().sqrt());
    (a, v, sigma)
}

trait SignNonZero {
    fn sgn_nonzero(self) -> Self;
}

impl<T: Real> SignNonZero for T {
    fn sgn_nonzero(self) -> Self {
        if self < T::zero() {
            -T::one()
        } else {
            T::one()
        }
    }
}
