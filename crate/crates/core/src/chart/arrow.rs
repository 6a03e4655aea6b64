//! 1- and 2-arrows (jets of point maps) and how they act on component arrays.

use super::domain::Point;
use super::linalg::Matrix;
use super::scalar::Scalar;
use super::tensor::{SymmetryKind, TensorBlock, Variance};
use crate::error::{GeometryError, Result};

/// Arrows with `|det f1|` at or below this are treated as singular.
pub const DET_TOLERANCE: f64 = 1e-12;

fn checked_inverse<S: Scalar>(f1: &Matrix<S>) -> Result<Matrix<S>> {
    let det = f1.det().re();
    if det.abs() <= DET_TOLERANCE {
        return Err(GeometryError::SingularArrow { det });
    }
    f1.inverse().ok_or(GeometryError::SingularArrow { det })
}

/// A 1-arrow `(x, y, f̄ⁱⱼ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneArrow<S = f64> {
    pub source: Point,
    pub target: Point,
    f1: Matrix<S>,
    f1_inv: Matrix<S>,
}

impl<S: Scalar> OneArrow<S> {
    pub fn new(source: Point, target: Point, f1: Matrix<S>) -> Result<Self> {
        if source.dim() != f1.dim() || target.dim() != f1.dim() {
            return Err(GeometryError::Dimension("arrow endpoints and f1 disagree in dimension".into()));
        }
        let f1_inv = checked_inverse(&f1)?;
        Ok(OneArrow { source, target, f1, f1_inv })
    }

    pub fn identity(at: Point) -> Self {
        let n = at.dim();
        OneArrow { source: at.clone(), target: at, f1: Matrix::identity(n), f1_inv: Matrix::identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.f1.dim()
    }

    pub fn f1(&self) -> &Matrix<S> {
        &self.f1
    }

    pub fn f1_inv(&self) -> &Matrix<S> {
        &self.f1_inv
    }

    /// `other ∘ self`: first `self` (x → y), then `other` (y → z).
    pub fn then(&self, other: &OneArrow<S>) -> Result<OneArrow<S>> {
        OneArrow::new(self.source.clone(), other.target.clone(), other.f1.mul(&self.f1))
    }

    pub fn inverse(&self) -> OneArrow<S> {
        OneArrow {
            source: self.target.clone(),
            target: self.source.clone(),
            f1: self.f1_inv.clone(),
            f1_inv: self.f1.clone(),
        }
    }
}

/// A 2-arrow `(x, y, f̄ⁱⱼ, f̄ⁱⱼₖ)` with `f̄ⁱⱼₖ` symmetric in `j, k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoArrow<S = f64> {
    pub first: OneArrow<S>,
    /// `f2[i·n² + j·n + k] = f̄ⁱⱼₖ`
    f2: Vec<S>,
}

impl<S: Scalar> TwoArrow<S> {
    /// Relative tolerance for the lower-index symmetry of `f2`.
    pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

    pub fn new(first: OneArrow<S>, f2: Vec<S>) -> Result<Self> {
        let n = first.dim();
        if f2.len() != n * n * n {
            return Err(GeometryError::Dimension(format!("f2 needs {} components", n * n * n)));
        }
        let scale = f2.iter().fold(1.0_f64, |m, v| m.max(v.re().abs()));
        for i in 0..n {
            for j in 0..n {
                for k in (j + 1)..n {
                    let d = (f2[i * n * n + j * n + k] - f2[i * n * n + k * n + j]).re().abs();
                    if d > Self::SYMMETRY_TOLERANCE * scale {
                        return Err(GeometryError::Symmetry(format!(
                            "f2 is not symmetric in its lower indices (component {}, {}, {} off by {d:e})",
                            i + 1,
                            j + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
        Ok(TwoArrow { first, f2 })
    }

    pub fn dim(&self) -> usize {
        self.first.dim()
    }

    pub fn f2(&self, i: usize, j: usize, k: usize) -> S {
        let n = self.dim();
        self.f2[i * n * n + j * n + k]
    }

    pub fn f2_components(&self) -> &[S] {
        &self.f2
    }
}

/// Push a tensor at the arrow's source to its target: upper slots are
/// contracted with `f1`, lower slots with `f1⁻¹`, label slots are left as
/// they are. Declared (anti)symmetries are kept exactly.
pub fn pushforward_tensor<S: Scalar>(arrow: &OneArrow<S>, t: &TensorBlock<S>) -> Result<TensorBlock<S>> {
    if t.rank() == 0 {
        return Ok(t.clone());
    }
    if t.dim() != arrow.dim() {
        return Err(GeometryError::Dimension("tensor and arrow dimensions differ".into()));
    }
    let mut out = t.clone();
    for (slot, v) in t.slots().iter().enumerate() {
        let m = match v {
            Variance::Upper => arrow.f1(),
            Variance::Lower => arrow.f1_inv(),
            Variance::Label => continue,
        };
        out = out.transform_slot(slot, m);
    }
    out.impose_symmetries();
    Ok(out)
}

/// A 2-form with values in `J₁T`: `ρ = (ρⁱ_{rj})` is the `T` part and
/// `σ = (σⁱ_{rj,k})` the `T*⊗T` part; both antisymmetric in `r, j`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetValued2Form<S = f64> {
    pub rho: TensorBlock<S>,
    pub sigma: TensorBlock<S>,
}

impl<S: Scalar> JetValued2Form<S> {
    pub fn rho_slots() -> [Variance; 3] {
        [Variance::Upper, Variance::Lower, Variance::Lower]
    }

    pub fn sigma_slots() -> [Variance; 4] {
        [Variance::Upper, Variance::Lower, Variance::Lower, Variance::Lower]
    }

    pub fn zeros(n: usize) -> Self {
        JetValued2Form {
            rho: TensorBlock::zeros(n, &Self::rho_slots()).with_symmetry(1, 2, SymmetryKind::Antisymmetric),
            sigma: TensorBlock::zeros(n, &Self::sigma_slots()).with_symmetry(1, 2, SymmetryKind::Antisymmetric),
        }
    }

    pub fn new(rho: TensorBlock<S>, sigma: TensorBlock<S>) -> Result<Self> {
        if rho.slots() != Self::rho_slots() || sigma.slots() != Self::sigma_slots() || rho.dim() != sigma.dim() {
            return Err(GeometryError::Dimension("jet-valued 2-form has the wrong shape".into()));
        }
        Ok(JetValued2Form { rho, sigma })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(JetValued2Form { rho: self.rho.sub(&other.rho)?, sigma: self.sigma.sub(&other.sigma)? })
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> JetValued2Form<T> {
        JetValued2Form { rho: self.rho.map(f), sigma: self.sigma.map(f) }
    }
}

impl JetValued2Form<f64> {
    /// `sqrt(‖ρ‖² + ‖σ‖²)`
    pub fn norm(&self) -> f64 {
        self.rho.norm().hypot(self.sigma.norm())
    }

    pub fn lift<T: Scalar>(&self) -> JetValued2Form<T> {
        self.map(|v| T::from_f64(*v))
    }
}

/// Push a `J₁T`-valued 2-form through a 2-arrow. The form slots transform
/// with `f1⁻¹`; the value `(ρⁱ, σⁱ_b)` transforms as a 1-jet of a vector
/// field: `ρ'ⁱ = fⁱₐρᵃ`, `σ'ⁱ_k = (fⁱₐᵦρᵃ + fⁱₐσᵃ_b)·gᵇ_k`.
pub fn pushforward_jet2form<S: Scalar>(arrow: &TwoArrow<S>, form: &JetValued2Form<S>) -> Result<JetValued2Form<S>> {
    let n = arrow.dim();
    if form.rho.dim() != n {
        return Err(GeometryError::Dimension("form and arrow dimensions differ".into()));
    }
    let rho = pushforward_tensor(&arrow.first, &form.rho)?;
    let f1 = arrow.first.f1();
    let g = arrow.first.f1_inv();
    // value part before the form and derivative slots are moved
    let mixed = TensorBlock::from_fn(n, &JetValued2Form::<S>::sigma_slots(), |idx| {
        let (i, c, d, b) = (idx[0], idx[1], idx[2], idx[3]);
        let mut acc = S::zero();
        for a in 0..n {
            acc += arrow.f2(i, a, b) * form.rho.get(&[a, c, d]);
            acc += f1[(i, a)] * form.sigma.get(&[a, c, d, b]);
        }
        acc
    })
    .with_symmetry(1, 2, SymmetryKind::Antisymmetric);
    let mut sigma = mixed.transform_slot(1, g).transform_slot(2, g).transform_slot(3, g);
    sigma.impose_symmetries();
    Ok(JetValued2Form { rho, sigma })
}
