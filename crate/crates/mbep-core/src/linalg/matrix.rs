//! Dense row-major matrix generic over a ring of scalars.
//!
//! The same container carries floating complex matrices (`CMatrix`), exact
//! complex-rational matrices and matrices of polynomials; only operations
//! whose scalar requirements are met are available per instantiation.

use super::scalar::{Conjugate, FieldScalar, Ring};
use crate::error::{Error, Result};
use num::complex::Complex64 as C64;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>, // row-major
}

pub type CMatrix = Matrix<C64>;

impl<T: Ring> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Column vector from a slice.
    pub fn column(v: &[T]) -> Self {
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col_vec(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn set_col(&mut self, c: usize, v: &[T]) {
        assert_eq!(v.len(), self.rows);
        for r in 0..self.rows {
            self[(r, c)] = v[r].clone();
        }
    }

    pub fn map<U: Ring>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x.clone())
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out: Matrix<T> = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)].clone();
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)].clone() + a.clone() * other[(k, j)].clone();
                    out[(i, j)] = v;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for j in 0..self.cols {
                    acc = acc + self[(i, j)].clone() * v[j].clone();
                }
                acc
            })
            .collect()
    }

    /// Standard Kronecker product:
    /// `(a ⊗ b)[(i·rows_b + k), (j·cols_b + l)] = a[i,j] · b[k,l]`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out: Matrix<T> = Matrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)].clone();
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] =
                            a.clone() * other[(k, l)].clone();
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> T {
        let n = self.rows.min(self.cols);
        let mut acc = T::zero();
        for i in 0..n {
            acc = acc + self[(i, i)].clone();
        }
        acc
    }

    pub fn pow(&self, k: usize) -> Self {
        let n = self.rows;
        assert!(self.is_square());
        let mut acc = Matrix::identity(n);
        for _ in 0..k {
            acc = acc.matmul(self);
        }
        acc
    }

    /// `self - s·I` for square matrices.
    pub fn sub_scalar_diag(&self, s: &T) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out[(i, i)] = out[(i, i)].clone() - s.clone();
        }
        out
    }

    /// Permute rows and columns simultaneously: `out[i,j] = self[perm[i], perm[j]]`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Self {
        assert!(self.is_square() && perm.len() == self.rows);
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(perm[i], perm[j])].clone())
    }
}

impl<T: Conjugate> Matrix<T> {
    pub fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }
}

impl<T: FieldScalar> Matrix<T> {
    /// Gauss-Jordan inverse with first-nonzero pivoting; exact over exact
    /// fields. Returns `None` when singular.
    pub fn inverse_field(&self) -> Option<Self> {
        let n = self.rows;
        assert!(self.is_square());
        let mut a = self.clone();
        let mut inv: Matrix<T> = Matrix::identity(n);
        for k in 0..n {
            let pivot_row = (k..n).find(|&r| !a[(r, k)].is_zero())?;
            if pivot_row != k {
                for j in 0..n {
                    a.data.swap(k * n + j, pivot_row * n + j);
                    inv.data.swap(k * n + j, pivot_row * n + j);
                }
            }
            let p = a[(k, k)].clone().inv();
            for j in 0..n {
                a[(k, j)] = a[(k, j)].clone() * p.clone();
                inv[(k, j)] = inv[(k, j)].clone() * p.clone();
            }
            for r in 0..n {
                if r == k || a[(r, k)].is_zero() {
                    continue;
                }
                let f = a[(r, k)].clone();
                for j in 0..n {
                    let v = a[(r, j)].clone() - f.clone() * a[(k, j)].clone();
                    a[(r, j)] = v;
                    let w = inv[(r, j)].clone() - f.clone() * inv[(k, j)].clone();
                    inv[(r, j)] = w;
                }
            }
        }
        Some(inv)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

// Floating-point specifics.
impl CMatrix {
    pub fn from_real_rows(rows: Vec<Vec<f64>>) -> Self {
        Matrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Solve `self · X = B` by partially pivoted LU. Errors on (numerically)
    /// singular systems.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        let n = self.require_square()?;
        if b.rows != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n} rows"),
                actual: format!("{} rows", b.rows),
            });
        }
        let mut a = self.clone();
        let mut x = b.clone();
        for k in 0..n {
            let (piv, pmag) = (k..n)
                .map(|r| (r, a[(r, k)].norm()))
                .max_by(|l, r| l.1.total_cmp(&r.1))
                .unwrap();
            if pmag == 0.0 {
                return Err(Error::Numeric("singular matrix in solve".into()));
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                }
                for j in 0..x.cols {
                    x.data.swap(k * x.cols + j, piv * x.cols + j);
                }
            }
            for r in k + 1..n {
                let f = a[(r, k)] / a[(k, k)];
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k..n {
                    let v = a[(k, j)];
                    a[(r, j)] -= f * v;
                }
                for j in 0..x.cols {
                    let v = x[(k, j)];
                    x[(r, j)] -= f * v;
                }
            }
        }
        for k in (0..n).rev() {
            for j in 0..x.cols {
                let mut acc = x[(k, j)];
                for l in k + 1..n {
                    acc -= a[(k, l)] * x[(l, j)];
                }
                x[(k, j)] = acc / a[(k, k)];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.solve(&CMatrix::identity(self.rows))
    }
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Kronecker product of two vectors (same convention as [`Matrix::kron`]).
pub fn vec_kron<T: Ring>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x.clone() * y.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_identity_gives_identity() {
        let i2 = CMatrix::identity(2);
        assert_eq!(i2.kron(&i2), CMatrix::identity(4));
    }

    #[test]
    fn kron_sigma_x_is_antidiagonal() {
        let sx = CMatrix::from_real_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let k = sx.kron(&sx);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(k[(i, j)], c(expect, 0.0));
            }
        }
    }

    #[test]
    fn kron_acts_on_vectors_factorwise() {
        let a = CMatrix::from_rows(vec![
            vec![c(1.0, 0.5), c(-0.3, 0.1)],
            vec![c(0.0, -1.0), c(2.0, 0.0)],
        ]);
        let b = CMatrix::from_rows(vec![
            vec![c(0.7, 0.0), c(0.2, -0.4)],
            vec![c(1.1, 0.3), c(-0.5, 0.9)],
        ]);
        let v = [c(0.4, 0.2), c(-1.0, 0.7)];
        let w = [c(0.9, -0.1), c(0.3, 0.6)];
        let lhs = a.kron(&b).matvec(&vec_kron(&v, &w));
        let rhs = vec_kron(&a.matvec(&v), &b.matvec(&w));
        for (x, y) in lhs.iter().zip(&rhs) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn solve_roundtrip() {
        let a = CMatrix::from_rows(vec![
            vec![c(2.0, 1.0), c(0.5, 0.0), c(0.0, -0.2)],
            vec![c(0.1, 0.0), c(-1.5, 0.4), c(0.3, 0.0)],
            vec![c(0.0, 0.9), c(0.2, 0.2), c(1.0, -1.0)],
        ]);
        let x = CMatrix::from_rows(vec![vec![c(1.0, 2.0)], vec![c(-0.5, 0.0)], vec![c(0.3, 0.7)]]);
        let b = a.matmul(&x);
        let sol = a.solve(&b).unwrap();
        for i in 0..3 {
            assert!((sol[(i, 0)] - x[(i, 0)]).norm() < 1e-12);
        }
    }
}
