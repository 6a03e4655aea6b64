//! Absolute parallelism: a frame `w` on the chart, its splitting, integrability
//! object and curvatures.

use crate::chart::lie::{JetSection, JetVector, TensorField};
use crate::chart::scalar::{Dual, Scalar};
use crate::chart::tensor::SymmetryKind::Antisymmetric;
use crate::chart::tensor::Variance::{Label, Lower, Upper};
use crate::chart::{pushforward_tensor, DomainBox, Matrix, OneArrow, Point, ScalarExpr, TensorBlock};
use crate::error::{GeometryError, Result};

/// Frames with `|det w|` at or below this are singular.
pub const FRAME_DET_TOLERANCE: f64 = 1e-12;

/// The structure object `w = (wⁱⱼ(x))` of a parallelism.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureObjectW {
    pub n: usize,
    /// Row-major: `w[i·n + j] = wⁱⱼ`.
    pub w: Vec<ScalarExpr>,
    pub domain: DomainBox,
}

fn seeded<S: Scalar>(x: &[S], a: usize) -> Vec<Dual<S>> {
    x.iter().enumerate().map(|(k, v)| Dual::new(*v, if k == a { S::one() } else { S::zero() })).collect()
}

fn re_point<S: Scalar>(x: &[S]) -> Vec<f64> {
    x.iter().map(|v| v.re()).collect()
}

impl StructureObjectW {
    pub fn new(w: Vec<ScalarExpr>, domain: DomainBox) -> Result<Self> {
        let n = domain.dim();
        if w.len() != n * n {
            return Err(GeometryError::Schema(format!("w needs {} components, got {}", n * n, w.len())));
        }
        Ok(StructureObjectW { n, w, domain })
    }

    /// `wⁱⱼ(x)`
    pub fn frame<S: Scalar>(&self, x: &[S]) -> Result<Matrix<S>> {
        let vals = self.w.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_fn(self.n, |i, j| vals[i * self.n + j]))
    }

    /// `(w⁻¹)ⁱⱼ(x)`, i.e. `w̃`.
    pub fn coframe<S: Scalar>(&self, x: &[S]) -> Result<Matrix<S>> {
        let w = self.frame(x)?;
        let det = w.det().re();
        if det.abs() <= FRAME_DET_TOLERANCE {
            return Err(GeometryError::SingularFrame { point: re_point(x), det });
        }
        w.inverse().ok_or(GeometryError::SingularFrame { point: re_point(x), det })
    }

    /// `Γⁱⱼₖ = ∂ⱼwⁱₐ w̃ᵃₖ`
    pub fn gamma<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        let n = self.n;
        let wt = self.coframe(x)?;
        let dw = (0..n).map(|j| Ok(self.frame(&seeded(x, j))?.map(|v| v.eps))).collect::<Result<Vec<_>>>()?;
        Ok(TensorBlock::from_fn(n, &[Upper, Lower, Lower], |idx| {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            let mut acc = S::zero();
            for a in 0..n {
                acc += dw[j][(i, a)] * wt[(a, k)];
            }
            acc
        }))
    }

    /// `I(w)ⁱⱼₖ = Γⁱⱼₖ − Γⁱₖⱼ`
    pub fn integrability<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        let g = self.gamma(x)?;
        Ok(TensorBlock::from_fn(self.n, &[Upper, Lower, Lower], |idx| {
            g.get(&[idx[0], idx[1], idx[2]]) - g.get(&[idx[0], idx[2], idx[1]])
        })
        .with_symmetry(1, 2, Antisymmetric))
    }

    /// `𝔯ⁱₖⱼ,ₐ = [∂ₖΓⁱₐⱼ + ΓⁱᵦⱼΓᵝₐₖ]₍ₖⱼ₎`
    pub fn linear_curvature<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        let n = self.n;
        let g = self.gamma(x)?;
        let dg = (0..n).map(|k| Ok(self.gamma(&seeded(x, k))?.map(|v| v.eps))).collect::<Result<Vec<_>>>()?;
        let half = |i: usize, k: usize, j: usize, a: usize| {
            let mut acc = dg[k].get(&[i, a, j]);
            for b in 0..n {
                acc += g.get(&[i, b, j]) * g.get(&[b, a, k]);
            }
            acc
        };
        Ok(TensorBlock::from_fn(n, &[Upper, Lower, Lower, Lower], |idx| {
            let (i, k, j, a) = (idx[0], idx[1], idx[2], idx[3]);
            half(i, k, j, a) - half(i, j, k, a)
        })
        .with_symmetry(1, 2, Antisymmetric))
    }

    fn check(&self, x: &Point) -> Result<()> {
        self.domain.check(x.coords())
    }
}

/// The unique arrow of the invariance groupoid from `x` to `y`:
/// `f1 = w(y)·w(x)⁻¹`.
pub fn epsilon_arrow(w: &StructureObjectW, x: &Point, y: &Point) -> Result<OneArrow> {
    w.check(x)?;
    w.check(y)?;
    let wy = w.frame(y.coords())?;
    w.coframe(y.coords())?;
    let f1 = wy.mul(&w.coframe(x.coords())?);
    OneArrow::new(x.clone(), y.clone(), f1)
}

pub fn gamma_of_w(w: &StructureObjectW, x: &Point) -> Result<TensorBlock> {
    w.check(x)?;
    w.gamma(x.coords())
}

pub fn integrability_w(w: &StructureObjectW, x: &Point) -> Result<TensorBlock> {
    w.check(x)?;
    w.integrability(x.coords())
}

/// `R(x, y) = I(w; y) − ε(x, y)₊ I(w; x)`
pub fn nonlinear_curvature_w(w: &StructureObjectW, x: &Point, y: &Point) -> Result<TensorBlock> {
    let arrow = epsilon_arrow(w, x, y)?;
    let pushed = pushforward_tensor(&arrow, &w.integrability(x.coords())?)?;
    w.integrability(y.coords())?.sub(&pushed)
}

pub fn linear_curvature_w(w: &StructureObjectW, x: &Point) -> Result<TensorBlock> {
    w.check(x)?;
    w.linear_curvature(x.coords())
}

/// Contract the last slot of `𝔯` with a vector: `𝔯ⁱₖⱼ,ₐξᵃ`.
pub fn contract_last(r: &TensorBlock, xi: &[f64]) -> TensorBlock {
    let n = r.dim();
    TensorBlock::from_fn(n, &[Upper, Lower, Lower], |idx| {
        (0..n).map(|a| r.get(&[idx[0], idx[1], idx[2], a]) * xi[a]).sum()
    })
    .with_symmetry(1, 2, Antisymmetric)
}

/// The ε-lift `(ξⁱ, Γⁱₐⱼξᵃ)` of a vector at `x`.
pub fn eps_lift_vector(w: &StructureObjectW, xi0: &[f64], x: &Point) -> Result<JetVector> {
    w.check(x)?;
    eps_lift_at(w, xi0, x.coords())
}

fn eps_lift_at<S: Scalar>(w: &StructureObjectW, xi0: &[S], x: &[S]) -> Result<JetVector<S>> {
    let n = w.n;
    if xi0.len() != n {
        return Err(GeometryError::Dimension("vector and frame dimensions differ".into()));
    }
    let g = w.gamma(x)?;
    let xi1 = Matrix::from_fn(n, |i, j| {
        let mut acc = S::zero();
        for a in 0..n {
            acc += g.get(&[i, a, j]) * xi0[a];
        }
        acc
    });
    JetVector::order1(xi0.to_vec(), xi1)
}

/// `‖R(x, x + tξ)/t − 𝔯(x)·ξ‖`
pub fn check_linearization_w(w: &StructureObjectW, x: &Point, xi: &JetVector, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(GeometryError::Domain(format!("step must be positive, got {step}")));
    }
    let y = x.offset(&xi.xi0, step);
    w.check(x)?;
    w.check(&y)?;
    let r = nonlinear_curvature_w(w, x, &y)?.scale(1.0 / step);
    let lin = contract_last(&w.linear_curvature(x.coords())?, &xi.xi0);
    r.distance(&lin)
}

/// The frame as a field whose second slot is a frame label.
pub struct FrameField<'a>(pub &'a StructureObjectW);

impl TensorField for FrameField<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        let m = self.0.frame(x)?;
        Ok(TensorBlock::from_fn(self.0.n, &[Upper, Label], |i| m[(i[0], i[1])]))
    }
}

/// `x ↦ I(w; x)`
pub struct IntegrabilityW<'a>(pub &'a StructureObjectW);

impl TensorField for IntegrabilityW<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        self.0.integrability(x)
    }
}

/// `x ↦ Γ(w; x)`
pub struct GammaW<'a>(pub &'a StructureObjectW);

impl TensorField for GammaW<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        self.0.gamma(x)
    }
}

/// The section `x ↦ (ξⁱ(x), Γⁱₐⱼ(x)ξᵃ(x))` of a vector field given by
/// expressions.
pub struct EpsLiftedSection<'a> {
    pub w: &'a StructureObjectW,
    pub xi0: Vec<ScalarExpr>,
}

impl JetSection for EpsLiftedSection<'_> {
    fn dim(&self) -> usize {
        self.w.n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<JetVector<S>> {
        let v = self.xi0.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?;
        eps_lift_at(self.w, &v, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(src: &[&str], domain: DomainBox) -> StructureObjectW {
        let n = domain.dim();
        StructureObjectW::new(src.iter().map(|s| ScalarExpr::parse_in(s, n).unwrap()).collect(), domain).unwrap()
    }

    fn axb() -> StructureObjectW {
        frame(&["x1", "0", "0", "x1"], DomainBox::new(vec![[0.5, 3.0], [-1.0, 4.0]]).unwrap())
    }

    fn p(v: &[f64]) -> Point {
        Point(v.to_vec())
    }

    #[test]
    fn arrow_of_scaled_frame() {
        let a = epsilon_arrow(&axb(), &p(&[1.0, 0.0]), &p(&[2.0, 3.0])).unwrap();
        assert!(a.f1().max_abs_diff(&Matrix::identity(2).scale(2.0)) < 1e-15);
        let same = epsilon_arrow(&axb(), &p(&[1.3, 0.2]), &p(&[1.3, 0.2])).unwrap();
        assert!(same.f1().max_abs_diff(&Matrix::identity(2)) < 1e-15);
    }

    #[test]
    fn gamma_of_scaled_frame() {
        let g = gamma_of_w(&axb(), &p(&[2.0, 1.0])).unwrap();
        let mut want = TensorBlock::zeros(2, &[Upper, Lower, Lower]);
        want.set(&[0, 0, 0], 0.5);
        want.set(&[1, 0, 1], 0.5);
        assert!(g.distance(&want).unwrap() < 1e-15);
    }

    #[test]
    fn integrability_of_scaled_frame() {
        let i = integrability_w(&axb(), &p(&[1.0, 0.0])).unwrap();
        assert_eq!(i.get(&[1, 0, 1]), 1.0);
        assert_eq!(i.get(&[1, 1, 0]), -1.0);
        assert_eq!(i.get(&[0, 0, 0]), 0.0);
        assert_eq!(i.get(&[0, 0, 1]), 0.0);
    }

    #[test]
    fn eps_lift_of_scaled_frame() {
        let j = eps_lift_vector(&axb(), &[1.0, 0.0], &p(&[2.0, 0.0])).unwrap();
        let xi1 = j.xi1().unwrap();
        assert_eq!(xi1.as_slice(), &[0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn singular_frame_reported() {
        let w = frame(&["x1", "0", "0", "1"], DomainBox::cube(2, -1.0, 1.0));
        assert!(matches!(gamma_of_w(&w, &p(&[0.0, 0.3])), Err(GeometryError::SingularFrame { .. })));
    }
}
