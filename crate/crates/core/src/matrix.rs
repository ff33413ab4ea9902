//! Dense row-major matrices and Gaussian elimination over any [`Scalar`].

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular matrix: no usable pivot in column {column}")]
    Singular { column: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self, LinalgError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| S::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
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

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] = out[(i, j)].clone() + a.clone() * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[S]) -> Result<Vec<S>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect())
    }

    /// Row vector times matrix, `vᵀ A`.
    pub fn vec_mul(&self, v: &[S]) -> Result<Vec<S>, LinalgError> {
        if v.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows,
                got: v.len(),
            });
        }
        let mut out = vec![S::zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                if !a.is_zero() {
                    *o = o.clone() + vi.clone() * a;
                }
            }
        }
        Ok(out)
    }

    pub fn row_sums(&self) -> Vec<S> {
        (0..self.rows)
            .map(|i| sum(self.row(i)))
            .collect()
    }

    pub fn column_sums(&self) -> Vec<S> {
        let ones = vec![S::one(); self.rows];
        self.vec_mul(&ones).expect("shape")
    }

    /// `1ᵀ A 1`.
    pub fn total(&self) -> S {
        sum(&self.data)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |a, b| a.clone() - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |a, b| a.clone() + b)
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|a| a.clone() * c)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    /// Outer product `u vᵀ`.
    pub fn outer(u: &[S], v: &[S]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i].clone() * &v[j])
    }

    pub fn max_abs(&self) -> S {
        max_abs(&self.data)
    }

    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.data.iter()
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc = acc + x.clone() * y;
        }
    }
    acc
}

pub fn sum<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, x| acc + x)
}

pub fn max_abs<S: Scalar>(v: &[S]) -> S {
    let mut best = S::zero();
    for x in v {
        let a = x.abs();
        if a > best {
            best = a;
        }
    }
    best
}

/// Max-norm of `a - b`.
pub fn max_abs_diff<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut best = S::zero();
    for (x, y) in a.iter().zip(b) {
        let d = (x.clone() - y).abs();
        if d > best {
            best = d;
        }
    }
    best
}

/// Solves `A X = B` for several right-hand sides by Gaussian elimination.
///
/// Pivots are chosen by largest magnitude in the column (partial pivoting).
/// For the rational backend this still picks the largest |value| among the
/// nonzero candidates, so both backends follow the same pivot sequence on
/// well-separated inputs.
pub fn solve_many<S: Scalar>(a: &Matrix<S>, rhs: &[Vec<S>]) -> Result<Vec<Vec<S>>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    let m = rhs.len();
    for b in rhs {
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
    }
    let width = n + m;
    let scale = a.max_abs();
    // Augmented [A | B], row-major.
    let mut w: Vec<Vec<S>> = (0..n)
        .map(|i| {
            let mut row = a.row(i).to_vec();
            row.extend(rhs.iter().map(|b| b[i].clone()));
            row
        })
        .collect();

    for k in 0..n {
        let mut pivot_row = None;
        let mut pivot_abs = S::zero();
        for (r, row) in w.iter().enumerate().skip(k) {
            if row[k].is_zero() {
                continue;
            }
            let v = row[k].abs();
            if pivot_row.is_none() || v > pivot_abs {
                pivot_abs = v;
                pivot_row = Some(r);
            }
        }
        let p = match pivot_row {
            Some(p) if !pivot_abs.is_negligible(&scale) => p,
            _ => return Err(LinalgError::Singular { column: k }),
        };
        w.swap(k, p);
        let (upper, lower) = w.split_at_mut(k + 1);
        let pivot = &upper[k];
        let inv = pivot[k].recip();
        for row in lower.iter_mut() {
            if row[k].is_zero() {
                continue;
            }
            let factor = row[k].clone() * &inv;
            row[k] = S::zero();
            for j in k + 1..width {
                if !pivot[j].is_zero() {
                    row[j] = row[j].clone() - factor.clone() * &pivot[j];
                }
            }
        }
    }

    let mut out = vec![vec![S::zero(); n]; m];
    for (c, x) in out.iter_mut().enumerate() {
        for i in (0..n).rev() {
            let mut acc = w[i][n + c].clone();
            for j in i + 1..n {
                if !w[i][j].is_zero() {
                    acc = acc - w[i][j].clone() * &x[j];
                }
            }
            x[i] = acc / &w[i][i];
        }
    }
    Ok(out)
}

pub fn solve<S: Scalar>(a: &Matrix<S>, b: &[S]) -> Result<Vec<S>, LinalgError> {
    let mut xs = solve_many(a, &[b.to_vec()])?;
    Ok(xs.pop().expect("one right-hand side"))
}

pub fn inverse<S: Scalar>(a: &Matrix<S>) -> Result<Matrix<S>, LinalgError> {
    let n = a.rows;
    let unit: Vec<Vec<S>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { S::one() } else { S::zero() }).collect())
        .collect();
    let cols = solve_many(a, &unit)?;
    Ok(Matrix::from_fn(n, n, |i, j| cols[j][i].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn solves_small_rational_system_exactly() {
        // Clique n=2 with the stubborn agent 0: X = I - (I - A) C, A = diag(1, 0, 0).
        let x = Matrix::from_rows(vec![
            vec![q(1, 1), q(0, 1), q(0, 1)],
            vec![q(-1, 2), q(1, 1), q(-1, 2)],
            vec![q(-1, 2), q(-1, 2), q(1, 1)],
        ])
        .unwrap();
        let m = inverse(&x).unwrap();
        assert_eq!(m.column(1), vec![q(0, 1), q(4, 3), q(2, 3)]);
        assert_eq!(m.total(), q(7, 1));
        assert_eq!(x.mul(&m).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn singular_is_reported() {
        let x = Matrix::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]]).unwrap();
        assert_eq!(inverse(&x), Err(LinalgError::Singular { column: 1 }));
        let xf = x.map(|v| v.to_f64());
        assert!(matches!(inverse(&xf), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(solve(&a, &[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn vec_mul_matches_transpose() {
        let a = Matrix::from_rows(vec![vec![q(1, 2), q(1, 3)], vec![q(2, 1), q(-1, 5)]]).unwrap();
        let v = vec![q(3, 1), q(1, 7)];
        assert_eq!(a.vec_mul(&v).unwrap(), a.transpose().mul_vec(&v).unwrap());
    }
}
