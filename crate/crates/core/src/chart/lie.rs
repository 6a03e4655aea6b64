//! Vector-field jets, tensor fields, and the formal Lie derivative.

use super::arrow::{pushforward_jet2form, pushforward_tensor, JetValued2Form, OneArrow, TwoArrow};
use super::domain::Point;
use super::expr::ScalarExpr;
use super::linalg::Matrix;
use super::scalar::{Dual, Scalar};
use super::tensor::{SlotSymmetry, TensorBlock, Variance};
use crate::error::{GeometryError, Result};

/// A jet `(ξⁱ, ξⁱⱼ, ξⁱⱼₖ)` of a vector field at one point.
///
/// `xi2[i·n² + j·n + k] = ξⁱⱼₖ`, symmetric in `j, k`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetVector<S = f64> {
    pub order: usize,
    pub xi0: Vec<S>,
    pub xi1: Option<Matrix<S>>,
    pub xi2: Option<Vec<S>>,
}

impl<S: Scalar> JetVector<S> {
    pub fn order0(xi0: Vec<S>) -> Self {
        JetVector { order: 0, xi0, xi1: None, xi2: None }
    }

    pub fn order1(xi0: Vec<S>, xi1: Matrix<S>) -> Result<Self> {
        if xi1.dim() != xi0.len() {
            return Err(GeometryError::Dimension("ξ₁ and ξ₀ disagree in dimension".into()));
        }
        Ok(JetVector { order: 1, xi0, xi1: Some(xi1), xi2: None })
    }

    /// Order-2 jet; `xi2` must be symmetric in its lower indices to 1e-12
    /// (relative) and is then symmetrized exactly.
    pub fn order2(xi0: Vec<S>, xi1: Matrix<S>, mut xi2: Vec<S>) -> Result<Self> {
        let n = xi0.len();
        if xi1.dim() != n || xi2.len() != n * n * n {
            return Err(GeometryError::Dimension("jet components disagree in dimension".into()));
        }
        let scale = xi2.iter().fold(1.0_f64, |m, v| m.max(v.re().abs()));
        for i in 0..n {
            for j in 0..n {
                for k in (j + 1)..n {
                    let (a, b) = (i * n * n + j * n + k, i * n * n + k * n + j);
                    if (xi2[a] - xi2[b]).re().abs() > 1e-12 * scale {
                        return Err(GeometryError::Symmetry("ξ₂ is not symmetric in its lower indices".into()));
                    }
                    let m = (xi2[a] + xi2[b]).scale(0.5);
                    xi2[a] = m;
                    xi2[b] = m;
                }
            }
        }
        Ok(JetVector { order: 2, xi0, xi1: Some(xi1), xi2: Some(xi2) })
    }

    pub fn zero(n: usize, order: usize) -> Self {
        JetVector {
            order,
            xi0: vec![S::zero(); n],
            xi1: (order >= 1).then(|| Matrix::zeros(n)),
            xi2: (order >= 2).then(|| vec![S::zero(); n * n * n]),
        }
    }

    pub fn dim(&self) -> usize {
        self.xi0.len()
    }

    pub fn xi1(&self) -> Result<&Matrix<S>> {
        self.xi1.as_ref().ok_or(GeometryError::JetOrder { have: self.order, need: 1 })
    }

    pub fn xi2(&self) -> Result<&[S]> {
        self.xi2.as_deref().ok_or(GeometryError::JetOrder { have: self.order, need: 2 })
    }

    pub fn xi2_at(&self, i: usize, j: usize, k: usize) -> S {
        let n = self.dim();
        self.xi2.as_ref().map_or(S::zero(), |v| v[i * n * n + j * n + k])
    }

    /// Keep only the components up to `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        JetVector {
            order,
            xi0: self.xi0.clone(),
            xi1: if order >= 1 { self.xi1.clone() } else { None },
            xi2: if order >= 2 { self.xi2.clone() } else { None },
        }
    }

    /// `a·self + b·other`, at the lower of the two orders.
    pub fn combine(&self, a: S, other: &Self, b: S) -> Self {
        let order = self.order.min(other.order);
        let lin = |u: &[S], v: &[S]| u.iter().zip(v).map(|(p, q)| a * *p + b * *q).collect::<Vec<_>>();
        JetVector {
            order,
            xi0: lin(&self.xi0, &other.xi0),
            xi1: match (&self.xi1, &other.xi1) {
                (Some(p), Some(q)) if order >= 1 => Some(p.scale(a).add(&q.scale(b))),
                _ => None,
            },
            xi2: match (&self.xi2, &other.xi2) {
                (Some(p), Some(q)) if order >= 2 => Some(lin(p, q)),
                _ => None,
            },
        }
    }
}

impl JetVector<f64> {
    pub fn lift<T: Scalar>(&self) -> JetVector<T> {
        let l = |v: &[f64]| v.iter().map(|c| T::from_f64(*c)).collect::<Vec<T>>();
        JetVector {
            order: self.order,
            xi0: l(&self.xi0),
            xi1: self.xi1.as_ref().map(|m| m.lift()),
            xi2: self.xi2.as_deref().map(l),
        }
    }

    pub fn norm(&self) -> f64 {
        let mut s: f64 = self.xi0.iter().map(|v| v * v).sum();
        if let Some(m) = &self.xi1 {
            s += m.norm().powi(2);
        }
        if let Some(v) = &self.xi2 {
            s += v.iter().map(|c| c * c).sum::<f64>();
        }
        s.sqrt()
    }
}

/// A tensor-valued field on the chart that can be evaluated at real or dual
/// points.
pub trait TensorField {
    fn dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>>;
}

/// A field of `J₁T`-valued 2-forms.
pub trait JetFormField {
    fn dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<JetValued2Form<S>>;
}

/// A section of `J_qT`: a jet attached to every point.
pub trait JetSection {
    fn dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<JetVector<S>>;
}

impl<F: TensorField> TensorField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        (**self).eval(x)
    }
}

fn seeded<S: Scalar>(x: &[S], a: usize) -> Vec<Dual<S>> {
    x.iter().enumerate().map(|(k, v)| Dual::new(*v, if k == a { S::one() } else { S::zero() })).collect()
}

fn eps_part<S: Scalar>(t: &TensorBlock<Dual<S>>) -> TensorBlock<S> {
    t.map(|v| v.eps)
}

/// `∂ₐT` at `x`, exact via one dual evaluation.
pub fn field_partial<F: TensorField, S: Scalar>(field: &F, x: &[S], a: usize) -> Result<TensorBlock<S>> {
    Ok(eps_part(&field.eval(&seeded(x, a))?))
}

/// All first partials `∂ₐT`, `a = 0..n`.
pub fn field_partials<F: TensorField, S: Scalar>(field: &F, x: &[S]) -> Result<Vec<TensorBlock<S>>> {
    (0..x.len()).map(|a| field_partial(field, x, a)).collect()
}

/// Derivative of a tensor field along `v` at `x`.
pub fn directional_derivative<F: TensorField>(field: &F, x: &[f64], v: &[f64]) -> Result<TensorBlock> {
    let pt: Vec<Dual<f64>> = x.iter().zip(v).map(|(p, d)| Dual::new(*p, *d)).collect();
    Ok(eps_part(&field.eval(&pt)?))
}

/// The first-order arrow `(x, x + tξ₀, I + tξ₁)` over dual `t`.
fn dual_arrow(jet: &JetVector, x: &Point) -> Result<OneArrow<Dual<f64>>> {
    let xi1 = jet.xi1()?;
    let n = jet.dim();
    let f1 = Matrix::from_fn(n, |i, j| Dual::new(if i == j { 1.0 } else { 0.0 }, xi1[(i, j)]));
    OneArrow::new(x.clone(), x.clone(), f1)
}

fn check_dims(jet: &JetVector, n: usize, x: &Point) -> Result<()> {
    if jet.dim() != n || x.dim() != n {
        return Err(GeometryError::Dimension("jet, field and point dimensions differ".into()));
    }
    Ok(())
}

/// Formal Lie derivative of a tensor field: `d/dt|₀ [T(x + tξ₀) − push T(x)]`
/// along the arrow `(x, x + tξ₀, I + tξ₁)`.
pub fn formal_lie_derivative<F: TensorField>(jet: &JetVector, field: &F, x: &Point) -> Result<TensorBlock> {
    check_dims(jet, field.dim(), x)?;
    if jet.order < 1 {
        return Err(GeometryError::JetOrder { have: jet.order, need: 1 });
    }
    let moved = field.eval(&x.coords().iter().zip(&jet.xi0).map(|(p, d)| Dual::new(*p, *d)).collect::<Vec<_>>())?;
    let here = field.eval(x.coords())?;
    let pushed = pushforward_tensor(&dual_arrow(jet, x)?, &here.lift())?;
    let mut out = eps_part(&moved.sub(&pushed)?);
    out.impose_symmetries();
    Ok(out)
}

/// Formal Lie derivative of a `J₁T`-valued 2-form field, along the 2-arrow
/// `(x, x + tξ₀, I + tξ₁, tξ₂)`.
pub fn formal_lie_derivative_pair<F: JetFormField>(jet: &JetVector, field: &F, x: &Point) -> Result<JetValued2Form> {
    check_dims(jet, field.dim(), x)?;
    if jet.order < 2 {
        return Err(GeometryError::JetOrder { have: jet.order, need: 2 });
    }
    let moved = field.eval(&x.coords().iter().zip(&jet.xi0).map(|(p, d)| Dual::new(*p, *d)).collect::<Vec<_>>())?;
    let here = field.eval(x.coords())?;
    let f2 = jet.xi2()?.iter().map(|v| Dual::new(0.0, *v)).collect();
    let arrow = TwoArrow::new(dual_arrow(jet, x)?, f2)?;
    let pushed = pushforward_jet2form(&arrow, &here.lift())?;
    let d = moved.sub(&pushed)?;
    let mut out = d.map(|v| v.eps);
    out.rho.impose_symmetries();
    out.sigma.impose_symmetries();
    Ok(out)
}

/// `∂ₐαⁱⱼ ξᵃ − αᵃⱼ ξⁱₐ + αⁱₐ ξᵃⱼ` for a `(1,1)` field `α`.
pub fn lie_derivative_11_closed<F: TensorField>(jet: &JetVector, alpha: &F, x: &Point) -> Result<TensorBlock> {
    check_dims(jet, alpha.dim(), x)?;
    let xi1 = jet.xi1()?;
    let n = jet.dim();
    let a0 = alpha.eval(x.coords())?;
    if a0.slots() != [Variance::Upper, Variance::Lower] {
        return Err(GeometryError::Dimension("closed form needs a (1,1) field".into()));
    }
    let da = field_partials(alpha, x.coords())?;
    Ok(TensorBlock::from_fn(n, &[Variance::Upper, Variance::Lower], |idx| {
        let (i, j) = (idx[0], idx[1]);
        let mut acc = 0.0;
        for a in 0..n {
            acc += da[a].get(&[i, j]) * jet.xi0[a];
            acc -= a0.get(&[a, j]) * xi1[(i, a)];
            acc += a0.get(&[i, a]) * xi1[(a, j)];
        }
        acc
    }))
}

/// A tensor field given by one expression per component (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct ExprTensorField {
    pub n: usize,
    pub slots: Vec<Variance>,
    pub symmetries: Vec<SlotSymmetry>,
    pub components: Vec<ScalarExpr>,
}

impl ExprTensorField {
    pub fn new(n: usize, slots: &[Variance], components: Vec<ScalarExpr>) -> Result<Self> {
        if components.len() != n.pow(slots.len() as u32) {
            return Err(GeometryError::Dimension(format!(
                "{} components given for a rank-{} field in dimension {n}",
                components.len(),
                slots.len()
            )));
        }
        Ok(ExprTensorField { n, slots: slots.to_vec(), symmetries: Vec::new(), components })
    }
}

impl TensorField for ExprTensorField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        let vals = self.components.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?;
        let mut k = 0;
        let mut t = TensorBlock::from_fn(self.n, &self.slots, |_| {
            k += 1;
            vals[k - 1]
        });
        for s in &self.symmetries {
            t = t.with_symmetry(s.a, s.b, s.kind);
        }
        Ok(t)
    }
}

/// A first-order section `(ξⁱ(x), ξⁱⱼ(x))` given by expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprJetSection {
    pub xi0: Vec<ScalarExpr>,
    /// Row-major `n×n`.
    pub xi1: Vec<ScalarExpr>,
}

impl ExprJetSection {
    /// The holonomic section `j₁ξ`: `ξⁱⱼ = ∂ⱼξⁱ`.
    pub fn prolonged(xi0: Vec<ScalarExpr>) -> Self {
        let n = xi0.len();
        let xi1 = (0..n * n).map(|f| xi0[f / n].diff(f % n)).collect();
        ExprJetSection { xi0, xi1 }
    }
}

impl JetSection for ExprJetSection {
    fn dim(&self) -> usize {
        self.xi0.len()
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<JetVector<S>> {
        let n = self.xi0.len();
        let xi0 = self.xi0.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?;
        let vals = self.xi1.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?;
        JetVector::order1(xi0, Matrix::from_fn(n, |i, j| vals[i * n + j]))
    }
}

/// The Spencer operator `(Dξ₁)ⁱⱼ = ∂ⱼξⁱ − ξⁱⱼ` on a first-order section.
pub fn spencer_d<J: JetSection>(section: &J, x: &Point) -> Result<TensorBlock> {
    let n = section.dim();
    let here = section.eval(x.coords())?;
    let xi1 = here.xi1()?;
    let mut grad = Vec::with_capacity(n);
    for j in 0..n {
        let d = section.eval(&seeded(x.coords(), j))?;
        grad.push(d.xi0.iter().map(|v| v.eps).collect::<Vec<f64>>());
    }
    Ok(TensorBlock::from_fn(n, &[Variance::Upper, Variance::Lower], |idx| grad[idx[1]][idx[0]] - xi1[(idx[0], idx[1])]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Variance::{Lower, Upper};

    fn e(s: &str) -> ScalarExpr {
        ScalarExpr::parse_in(s, 2).unwrap()
    }

    fn alpha() -> ExprTensorField {
        ExprTensorField::new(2, &[Upper, Lower], vec![e("x1*x2"), e("sin(x1)"), e("1"), e("x2^2+x1")]).unwrap()
    }

    fn jet1() -> JetVector {
        JetVector::order1(vec![0.3, -0.7], Matrix::from_rows(&[vec![0.2, 1.1], vec![-0.4, 0.5]])).unwrap()
    }

    #[test]
    fn operational_matches_closed_form() {
        let x = Point(vec![0.4, 0.9]);
        let a = formal_lie_derivative(&jet1(), &alpha(), &x).unwrap();
        let b = lie_derivative_11_closed(&jet1(), &alpha(), &x).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-12);
    }

    #[test]
    fn identity_tensor_is_invariant() {
        let id = ExprTensorField::new(2, &[Upper, Lower], vec![e("1"), e("0"), e("0"), e("1")]).unwrap();
        let x = Point(vec![0.1, 0.2]);
        assert_eq!(lie_derivative_11_closed(&jet1(), &id, &x).unwrap().max_abs(), 0.0);
        assert_eq!(formal_lie_derivative(&jet1(), &id, &x).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn zero_jet_and_constant_scalar() {
        let x = Point(vec![0.1, 0.2]);
        let z = JetVector::zero(2, 1);
        assert_eq!(formal_lie_derivative(&z, &alpha(), &x).unwrap().max_abs(), 0.0);
        let c = ExprTensorField::new(2, &[], vec![e("3.5")]).unwrap();
        assert_eq!(formal_lie_derivative(&jet1(), &c, &x).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn order_zero_jet_rejected() {
        let j = JetVector::order0(vec![1.0, 0.0]);
        let r = formal_lie_derivative(&j, &alpha(), &Point(vec![0.1, 0.2]));
        assert!(matches!(r, Err(GeometryError::JetOrder { have: 0, need: 1 })));
    }

    #[test]
    fn spencer_operator_examples() {
        let x = Point(vec![0.3, -0.2]);
        let s = ExprJetSection::prolonged(vec![e("x1*x2"), e("sin(x2)")]);
        assert!(spencer_d(&s, &x).unwrap().max_abs() < 1e-15);
        let m = ExprJetSection { xi0: vec![e("0"), e("0")], xi1: vec![e("1"), e("2"), e("3"), e("4")] };
        assert_eq!(spencer_d(&m, &x).unwrap().components(), &[-1.0, -2.0, -3.0, -4.0]);
    }

    #[test]
    fn asymmetric_second_jet_rejected() {
        let mut xi2 = vec![0.0; 8];
        xi2[1] = 1.0;
        assert!(JetVector::order2(vec![0.0; 2], Matrix::zeros(2), xi2).is_err());
    }
}
