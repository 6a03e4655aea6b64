//! Dense component arrays with an explicit variance signature.

use serde::Serialize;

use super::linalg::Matrix;
use super::scalar::Scalar;
use crate::error::{GeometryError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Variance {
    Upper,
    Lower,
    /// A frame label rather than a coordinate index; arrows leave it alone.
    Label,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SymmetryKind {
    Symmetric,
    Antisymmetric,
}

/// A declared (anti)symmetry between two slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SlotSymmetry {
    pub a: usize,
    pub b: usize,
    pub kind: SymmetryKind,
}

/// Components `T[i0, i1, ...]` stored row-major (last slot fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct TensorBlock<S = f64> {
    n: usize,
    slots: Vec<Variance>,
    symmetries: Vec<SlotSymmetry>,
    data: Vec<S>,
}

impl<S: Scalar> TensorBlock<S> {
    pub fn zeros(n: usize, slots: &[Variance]) -> Self {
        TensorBlock {
            n,
            slots: slots.to_vec(),
            symmetries: Vec::new(),
            data: vec![S::zero(); n.pow(slots.len() as u32)],
        }
    }

    /// Valence-0 block on an `n`-dimensional chart.
    pub fn scalar(n: usize, value: S) -> Self {
        TensorBlock { n, slots: Vec::new(), symmetries: Vec::new(), data: vec![value] }
    }

    pub fn from_fn(n: usize, slots: &[Variance], mut f: impl FnMut(&[usize]) -> S) -> Self {
        let mut t = Self::zeros(n, slots);
        let mut idx = vec![0; slots.len()];
        for flat in 0..t.data.len() {
            t.unflatten(flat, &mut idx);
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn with_symmetry(mut self, a: usize, b: usize, kind: SymmetryKind) -> Self {
        assert!(a < self.rank() && b < self.rank() && a != b);
        assert_eq!(self.slots[a], self.slots[b], "only slots of equal variance can be paired");
        self.symmetries.push(SlotSymmetry { a, b, kind });
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Variance] {
        &self.slots
    }

    pub fn symmetries(&self) -> &[SlotSymmetry] {
        &self.symmetries
    }

    pub fn components(&self) -> &[S] {
        &self.data
    }

    fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, i| acc * self.n + i)
    }

    fn unflatten(&self, mut flat: usize, idx: &mut [usize]) {
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.n.max(1);
            flat /= self.n.max(1);
        }
    }

    pub fn get(&self, idx: &[usize]) -> S {
        self.data[self.flat(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let f = self.flat(idx);
        self.data[f] = v;
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TensorBlock<T> {
        TensorBlock {
            n: self.n,
            slots: self.slots.clone(),
            symmetries: self.symmetries.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    fn same_shape(&self, other: &TensorBlock<S>) -> Result<()> {
        if self.n != other.n || self.slots != other.slots {
            return Err(GeometryError::Dimension(format!(
                "tensor shapes differ: {:?}/{} vs {:?}/{}",
                self.slots, self.n, other.slots, other.n
            )));
        }
        Ok(())
    }

    pub fn sub(&self, other: &TensorBlock<S>) -> Result<TensorBlock<S>> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= *b;
        }
        Ok(out)
    }

    pub fn add(&self, other: &TensorBlock<S>) -> Result<TensorBlock<S>> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(out)
    }

    pub fn scale(&self, k: S) -> TensorBlock<S> {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = *v * k;
        }
        out
    }

    /// Contract slot `slot` with a matrix: for an upper slot
    /// `T'[..i..] = Σₐ m[i][a] T[..a..]`, for a lower slot
    /// `T'[..j..] = Σᵦ T[..b..] m[b][j]`.
    pub fn transform_slot(&self, slot: usize, m: &Matrix<S>) -> TensorBlock<S> {
        let n = self.n;
        let upper = self.slots[slot] == Variance::Upper;
        let mut out = self.clone();
        let stride = n.pow((self.rank() - slot - 1) as u32);
        let mut idx = vec![0; self.rank()];
        for flat in 0..self.data.len() {
            self.unflatten(flat, &mut idx);
            let i = idx[slot];
            let base = flat - i * stride;
            let mut acc = S::zero();
            for a in 0..n {
                let coeff = if upper { m[(i, a)] } else { m[(a, i)] };
                acc += coeff * self.data[base + a * stride];
            }
            out.data[flat] = acc;
        }
        out
    }

    /// Largest violation of the declared (anti)symmetries.
    pub fn symmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut idx = vec![0; self.rank()];
        for flat in 0..self.data.len() {
            self.unflatten(flat, &mut idx);
            for s in &self.symmetries {
                let mut swapped = idx.clone();
                swapped.swap(s.a, s.b);
                let v = self.data[flat];
                let w = self.get(&swapped);
                let r = match s.kind {
                    SymmetryKind::Symmetric => (v - w).re(),
                    SymmetryKind::Antisymmetric => (v + w).re(),
                };
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// Project onto the declared (anti)symmetries so they hold exactly.
    pub fn impose_symmetries(&mut self) {
        let syms = self.symmetries.clone();
        let mut idx = vec![0; self.rank()];
        for s in syms {
            for flat in 0..self.data.len() {
                self.unflatten(flat, &mut idx);
                if idx[s.a] >= idx[s.b] {
                    continue;
                }
                let mut swapped = idx.clone();
                swapped.swap(s.a, s.b);
                let other = self.flat(&swapped);
                let (v, w) = (self.data[flat], self.data[other]);
                match s.kind {
                    SymmetryKind::Symmetric => {
                        let m = (v + w).scale(0.5);
                        self.data[flat] = m;
                        self.data[other] = m;
                    }
                    SymmetryKind::Antisymmetric => {
                        let m = (v - w).scale(0.5);
                        self.data[flat] = m;
                        self.data[other] = -m;
                    }
                }
            }
            if s.kind == SymmetryKind::Antisymmetric {
                for flat in 0..self.data.len() {
                    self.unflatten(flat, &mut idx);
                    if idx[s.a] == idx[s.b] {
                        self.data[flat] = S::zero();
                    }
                }
            }
        }
    }

    /// Trace over an upper/lower slot pair.
    pub fn contract(&self, upper: usize, lower: usize) -> Result<TensorBlock<S>> {
        if self.slots.get(upper) != Some(&Variance::Upper) || self.slots.get(lower) != Some(&Variance::Lower) {
            return Err(GeometryError::Dimension("contraction needs one upper and one lower slot".into()));
        }
        let remaining: Vec<Variance> =
            self.slots.iter().enumerate().filter(|(i, _)| *i != upper && *i != lower).map(|(_, v)| *v).collect();
        let n = self.n;
        let mut out = TensorBlock::zeros(n, &remaining);
        let mut idx = vec![0; self.rank()];
        for flat in 0..self.data.len() {
            self.unflatten(flat, &mut idx);
            if idx[upper] != idx[lower] {
                continue;
            }
            let rest: Vec<usize> =
                idx.iter().enumerate().filter(|(i, _)| *i != upper && *i != lower).map(|(_, v)| *v).collect();
            let target = out.flat(&rest);
            out.data[target] += self.data[flat];
        }
        Ok(out)
    }
}

impl TensorBlock<f64> {
    /// Frobenius norm over all components.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn lift<T: Scalar>(&self) -> TensorBlock<T> {
        self.map(|v| T::from_f64(*v))
    }

    /// Frobenius distance to a block of the same shape.
    pub fn distance(&self, other: &TensorBlock<f64>) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Variance::{Lower, Upper};

    #[test]
    fn indexing_is_row_major() {
        let t = TensorBlock::<f64>::from_fn(2, &[Upper, Lower, Lower], |i| (i[0] * 100 + i[1] * 10 + i[2]) as f64);
        assert_eq!(t.get(&[1, 0, 1]), 101.0);
        assert_eq!(t.components()[5], 101.0);
    }

    #[test]
    fn slot_transform_matches_explicit_sum() {
        let t = TensorBlock::<f64>::from_fn(2, &[Upper, Lower], |i| (i[0] * 2 + i[1]) as f64 + 1.0);
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let up = t.transform_slot(0, &m);
        // up[i][j] = Σ_a m[i][a] t[a][j]
        assert_eq!(up.get(&[1, 0]), 3.0 * 1.0 + 4.0 * 3.0);
        let low = t.transform_slot(1, &m);
        // low[i][j] = Σ_b t[i][b] m[b][j]
        assert_eq!(low.get(&[0, 1]), 1.0 * 2.0 + 2.0 * 4.0);
    }

    #[test]
    fn imposing_antisymmetry_is_exact() {
        let mut t =
            TensorBlock::<f64>::from_fn(3, &[Upper, Lower, Lower], |i| (i[0] + 2 * i[1]) as f64 * 0.1 - i[2] as f64)
                .with_symmetry(1, 2, SymmetryKind::Antisymmetric);
        assert!(t.symmetry_residual() > 0.0);
        t.impose_symmetries();
        assert_eq!(t.symmetry_residual(), 0.0);
    }

    #[test]
    fn contraction_of_identity_is_dimension() {
        let t = TensorBlock::<f64>::from_fn(3, &[Upper, Lower], |i| if i[0] == i[1] { 1.0 } else { 0.0 });
        let c = t.contract(0, 1).unwrap();
        assert_eq!(c.rank(), 0);
        assert_eq!(c.components(), &[3.0]);
        assert!(t.contract(1, 0).is_err());
    }
}
