//! Dense matrices, LU factorization (real and complex), and symmetric
//! tridiagonal inertia counts. Deliberately minimal: just what the solvers
//! in this crate consume, generic over the scalar so extended-precision
//! paths reuse the same code.

use super::cplx::Cplx;
use super::real::Real;
use std::ops::{Index, IndexMut};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is singular at pivot column {0}")]
    Singular(usize),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c));
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut s = T::zero();
                for (a, b) in self.row(i).iter().zip(x) {
                    s += *a * *b;
                }
                s
            })
            .collect()
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for v in &self.data {
            m = m.max(v.abs());
        }
        m
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting.
pub struct Lu<T> {
    lu: Matrix<T>,
    piv: Vec<usize>,
    det_sign: i32,
}

impl<T: Real> Lu<T> {
    pub fn factor(mut a: Matrix<T>) -> Result<Self, LinalgError> {
        assert_eq!(a.rows, a.cols);
        let n = a.rows;
        let mut piv: Vec<usize> = (0..n).collect();
        let mut det_sign = 1;
        for col in 0..n {
            let mut best = col;
            let mut best_mag = a[(col, col)].abs().to_f64();
            for r in col + 1..n {
                let mag = a[(r, col)].abs().to_f64();
                if mag > best_mag {
                    best_mag = mag;
                    best = r;
                }
            }
            if best_mag == 0.0 {
                return Err(LinalgError::Singular(col));
            }
            if best != col {
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(best, j)];
                    a[(best, j)] = tmp;
                }
                piv.swap(col, best);
                det_sign = -det_sign;
            }
            let inv = T::one() / a[(col, col)];
            for r in col + 1..n {
                let m = a[(r, col)] * inv;
                a[(r, col)] = m;
                if m != T::zero() {
                    for j in col + 1..n {
                        let s = a[(col, j)];
                        a[(r, j)] -= m * s;
                    }
                }
            }
        }
        Ok(Lu { lu: a, piv, det_sign })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solve A X = B column by column.
    pub fn solve_mat(&self, b: &Matrix<T>) -> Matrix<T> {
        let n = self.lu.rows;
        assert_eq!(b.rows, n);
        let mut out = Matrix::zeros(n, b.cols);
        let mut col = vec![T::zero(); n];
        for j in 0..b.cols {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            let x = self.solve(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    pub fn det(&self) -> T {
        let mut d = if self.det_sign > 0 { T::one() } else { -T::one() };
        for i in 0..self.lu.rows {
            d *= self.lu[(i, i)];
        }
        d
    }
}

/// LU factorization with partial pivoting over complex scalars.
pub struct CLu<T> {
    lu: Vec<Vec<Cplx<T>>>,
    piv: Vec<usize>,
}

impl<T: Real> CLu<T> {
    pub fn factor(mut a: Vec<Vec<Cplx<T>>>) -> Result<Self, LinalgError> {
        let n = a.len();
        assert!(a.iter().all(|r| r.len() == n));
        let mut piv: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut best = col;
            let mut best_mag = a[col][col].norm_sqr().to_f64();
            for r in col + 1..n {
                let mag = a[r][col].norm_sqr().to_f64();
                if mag > best_mag {
                    best_mag = mag;
                    best = r;
                }
            }
            if best_mag == 0.0 {
                return Err(LinalgError::Singular(col));
            }
            if best != col {
                a.swap(col, best);
                piv.swap(col, best);
            }
            let inv = Cplx::one() / a[col][col];
            for r in col + 1..n {
                let m = a[r][col] * inv;
                a[r][col] = m;
                if m != Cplx::zero() {
                    for j in col + 1..n {
                        let s = a[col][j];
                        a[r][j] -= m * s;
                    }
                }
            }
        }
        Ok(CLu { lu: a, piv })
    }

    pub fn solve(&self, b: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let n = self.lu.len();
        assert_eq!(b.len(), n);
        let mut x: Vec<Cplx<T>> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i][j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i][j] * x[j];
            }
            x[i] = s / self.lu[i][i];
        }
        x
    }
}

/// Count eigenvalues of a symmetric tridiagonal matrix strictly below
/// `shift` via the signs of the Sturm/LDLᵀ pivot sequence. `off[i]` couples
/// rows i and i+1. Pivots inside the rounding band are forced negative
/// (LAPACK's convention), which keeps the count correct even when a leading
/// minor is singular.
pub fn sym_tridiag_count_below<T: Real>(diag: &[T], off: &[T], shift: T) -> usize {
    let n = diag.len();
    assert_eq!(off.len() + 1, n.max(1));
    let scale = diag
        .iter()
        .map(|d| d.abs())
        .chain(off.iter().map(|o| o.abs()))
        .fold(T::zero(), |a, b| a.max(b))
        .max(T::one());
    let pivmin = T::eps() * T::eps() * scale;
    let mut below = 0;
    let mut d = T::one();
    for i in 0..n {
        let mut di = diag[i] - shift;
        if i > 0 {
            di -= off[i - 1] * off[i - 1] / d;
        }
        if di.abs() <= pivmin {
            di = -pivmin;
        }
        if di < T::zero() {
            below += 1;
        }
        d = di;
    }
    below
}
