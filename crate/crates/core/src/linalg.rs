//! Small dense and tridiagonal solvers.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Field element usable by [`DenseMatrix`].
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + PartialEq
{
    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let prod = a * other[(k, j)];
                    out[(i, j)] = out[(i, j)] + prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// Largest `|A - A^T|` entry.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).modulus());
            }
        }
        worst
    }

    /// Largest entry of `|A - I|`.
    pub fn distance_from_identity(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((self[(i, j)] - target).modulus());
            }
        }
        worst
    }

    /// Inverse by LU with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let lu = Lu::factor(self.clone())?;
        let n = self.n;
        let mut inv = Self::zeros(n);
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = T::zero());
            col[j] = T::one();
            let x = lu.solve(&col);
            for i in 0..n {
                inv[(i, j)] = x[i];
            }
        }
        Ok(inv)
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        Ok(Lu::factor(self.clone())?.solve(b))
    }
}

impl<T> core::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> core::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

struct Lu<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    fn factor(mut a: DenseMatrix<T>) -> Result<Self> {
        let n = a.n;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().fold(0.0_f64, |m, v| m.max(v.modulus()));
        let tiny = scale * f64::EPSILON * n as f64;
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, a[(i, k)].modulus()))
                .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if !(best > tiny) {
                return Err(Error::SingularMatrix { column: k });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let factor = a[(i, k)] / pivot;
                a[(i, k)] = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let upd = a[(i, j)] - factor * a[(k, j)];
                    a[(i, j)] = upd;
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.n;
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc = acc - self.lu[(i, j)] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc = acc - self.lu[(i, j)] * y[j];
            }
            y[i] = acc / self.lu[(i, i)];
        }
        y
    }
}

/// Thomas algorithm for a tridiagonal system with constant off-diagonals.
///
/// `lower` and `upper` multiply `x[i-1]` and `x[i+1]`; `diag` has the main
/// diagonal. No pivoting, so the matrix must be diagonally dominant (true for
/// the Crank-Nicolson left-hand side).
pub fn solve_tridiagonal(
    lower: Complex64,
    diag: &[Complex64],
    upper: Complex64,
    rhs: &[Complex64],
    out: &mut [Complex64],
    scratch: &mut [Complex64],
) -> Result<()> {
    let n = diag.len();
    if rhs.len() != n || out.len() != n || scratch.len() != n {
        return Err(Error::Mismatch("tridiagonal system dimensions"));
    }
    if n == 0 {
        return Ok(());
    }
    let mut denom = diag[0];
    if denom.norm() == 0.0 {
        return Err(Error::SingularMatrix { column: 0 });
    }
    scratch[0] = upper / denom;
    out[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower * scratch[i - 1];
        if denom.norm() == 0.0 {
            return Err(Error::SingularMatrix { column: i });
        }
        scratch[i] = upper / denom;
        out[i] = (rhs[i] - lower * out[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = out[i + 1];
        out[i] -= scratch[i] * next;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_inverse() {
        let mut a = DenseMatrix::<f64>::zeros(2);
        a[(0, 0)] = 3.0;
        a[(0, 1)] = -2.0;
        a[(1, 0)] = -2.0;
        a[(1, 1)] = 3.0;
        let inv = a.inverse().unwrap();
        assert!((inv[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((inv[(0, 1)] - 0.4).abs() < 1e-15);
        assert!(a.mul(&inv).distance_from_identity() < 1e-15);
    }

    #[test]
    fn singular_is_refused() {
        let mut a = DenseMatrix::<f64>::zeros(2);
        a[(0, 0)] = 1.0;
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        a[(1, 1)] = 1.0;
        assert!(matches!(a.inverse(), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let mut a = DenseMatrix::<Complex64>::zeros(2);
        a[(0, 1)] = Complex64::new(1.0, 0.0);
        a[(1, 0)] = Complex64::new(0.0, 2.0);
        let x = a.solve(&[Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)]).unwrap();
        assert!((x[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - Complex64::new(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn thomas_matches_dense() {
        let n = 6;
        let lower = Complex64::new(-1.0, 0.3);
        let upper = Complex64::new(-1.0, 0.3);
        let diag: Vec<_> = (0..n).map(|i| Complex64::new(4.0 + i as f64, 1.0)).collect();
        let rhs: Vec<_> = (0..n).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let mut dense = DenseMatrix::<Complex64>::zeros(n);
        for i in 0..n {
            dense[(i, i)] = diag[i];
            if i > 0 {
                dense[(i, i - 1)] = lower;
            }
            if i + 1 < n {
                dense[(i, i + 1)] = upper;
            }
        }
        let want = dense.solve(&rhs).unwrap();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = out.clone();
        solve_tridiagonal(lower, &diag, upper, &rhs, &mut out, &mut scratch).unwrap();
        for (a, b) in out.iter().zip(&want) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
