//! Small dense square matrices over any [`Scalar`].

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

use super::scalar::Scalar;

/// Row-major `n×n` matrix; `m[(i, j)]` is row `i`, column `j` (for an arrow,
/// `f1[(i, j)] = f̄ⁱⱼ`).
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S = f64> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix rows must be square");
            data.extend_from_slice(r);
        }
        Matrix { n, data }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { n: self.n, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn mul(&self, rhs: &Matrix<S>) -> Matrix<S> {
        let n = self.n;
        Self::from_fn(n, |i, j| {
            let mut acc = S::zero();
            for k in 0..n {
                acc += self[(i, k)] * rhs[(k, j)];
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        (0..self.n)
            .map(|i| {
                let mut acc = S::zero();
                for k in 0..self.n {
                    acc += self[(i, k)] * v[k];
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, rhs: &Matrix<S>) -> Matrix<S> {
        Self::from_fn(self.n, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &Matrix<S>) -> Matrix<S> {
        Self::from_fn(self.n, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    pub fn scale(&self, k: S) -> Matrix<S> {
        self.map(|v| *v * k)
    }

    /// Determinant by Gaussian elimination with partial pivoting on the real
    /// parts.
    pub fn det(&self) -> S {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = S::one();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| a[r * n + col].re().abs().total_cmp(&a[s * n + col].re().abs()))
                .unwrap_or(col);
            if a[pivot * n + col].re() == 0.0 {
                return S::zero();
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det = det * p;
            for r in (col + 1)..n {
                let factor = a[r * n + col] / p;
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] -= factor * v;
                }
            }
        }
        det
    }

    /// Inverse by Gauss–Jordan elimination; `None` when a pivot vanishes.
    pub fn inverse(&self) -> Option<Matrix<S>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Matrix::<S>::identity(n).data;
        for col in 0..n {
            let pivot = (col..n).max_by(|&r, &s| a[r * n + col].re().abs().total_cmp(&a[s * n + col].re().abs()))?;
            if a[pivot * n + col].re() == 0.0 {
                return None;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                    inv.swap(col * n + k, pivot * n + k);
                }
            }
            let p = a[col * n + col];
            for k in 0..n {
                a[col * n + k] = a[col * n + k] / p;
                inv[col * n + k] = inv[col * n + k] / p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[r * n + col];
                for k in 0..n {
                    let va = a[col * n + k];
                    let vi = inv[col * n + k];
                    a[r * n + k] -= factor * va;
                    inv[r * n + k] -= factor * vi;
                }
            }
        }
        Some(Matrix { n, data: inv })
    }
}

impl Matrix<f64> {
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix<f64>) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        Self::from_fn(n, |i, j| m[(i, j)])
    }

    /// Promote to a matrix of constant duals (or any other scalar).
    pub fn lift<T: Scalar>(&self) -> Matrix<T> {
        self.map(|v| T::from_f64(*v))
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}

/// Serialized as a list of rows.
impl Serialize for Matrix<f64> {
    fn serialize<Z: Serializer>(&self, ser: Z) -> Result<Z::Ok, Z::Error> {
        let rows: Vec<&[f64]> = self.data.chunks(self.n.max(1)).collect();
        rows.serialize(ser)
    }
}
