//! Affine structures: the object `Γⁱⱼₖ(x)`, its splitting, integrability
//! object and curvatures.

use serde::Serialize;

use crate::chart::expr::symbolic_inverse;
use crate::chart::lie::{formal_lie_derivative, JetVector, TensorField};
use crate::chart::sampling::QuasiSampler;
use crate::chart::scalar::{Dual, Scalar};
use crate::chart::tensor::SymmetryKind::{Antisymmetric, Symmetric};
use crate::chart::tensor::Variance::{Lower, Upper};
use crate::chart::{pushforward_tensor, DomainBox, Matrix, OneArrow, Point, ScalarExpr, TensorBlock, TwoArrow};
use crate::error::{GeometryError, Result};

/// Relative tolerance for the lower-index symmetry of `Γ` input.
pub const GAMMA_SYMMETRY_TOLERANCE: f64 = 1e-12;

/// An affine structure object `Γⁱⱼₖ(x)`, symmetric in `j, k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineObject {
    pub n: usize,
    /// `gamma[i·n² + j·n + k] = Γⁱⱼₖ`
    pub gamma: Vec<ScalarExpr>,
    pub domain: DomainBox,
}

fn seeded<S: Scalar>(x: &[S], a: usize) -> Vec<Dual<S>> {
    x.iter().enumerate().map(|(k, v)| Dual::new(*v, if k == a { S::one() } else { S::zero() })).collect()
}

impl AffineObject {
    /// Checks `Γⁱⱼₖ = Γⁱₖⱼ` at a spread of points in the domain, then stores
    /// the `j ≤ k` expression for both orders so the symmetry is exact.
    pub fn new(gamma: Vec<ScalarExpr>, domain: DomainBox) -> Result<Self> {
        let n = domain.dim();
        if gamma.len() != n * n * n {
            return Err(GeometryError::Schema(format!("Γ needs {} components, got {}", n * n * n, gamma.len())));
        }
        let at = |i: usize, j: usize, k: usize| i * n * n + j * n + k;
        let probes = QuasiSampler::new(&domain, 0).take(16);
        for i in 0..n {
            for j in 0..n {
                for k in (j + 1)..n {
                    let (a, b) = (&gamma[at(i, j, k)], &gamma[at(i, k, j)]);
                    if a == b {
                        continue;
                    }
                    for p in &probes {
                        let (Ok(u), Ok(v)) = (a.eval(p.coords()), b.eval(p.coords())) else {
                            continue;
                        };
                        if (u - v).abs() > GAMMA_SYMMETRY_TOLERANCE * u.abs().max(v.abs()).max(1.0) {
                            return Err(GeometryError::Symmetry(format!(
                                "Γ^{}_{}{} = {a} differs from Γ^{}_{}{} = {b}",
                                i + 1,
                                j + 1,
                                k + 1,
                                i + 1,
                                k + 1,
                                j + 1
                            )));
                        }
                    }
                }
            }
        }
        let mut gamma = gamma;
        for i in 0..n {
            for j in 0..n {
                for k in (j + 1)..n {
                    gamma[at(i, k, j)] = gamma[at(i, j, k)].clone();
                }
            }
        }
        Ok(AffineObject { n, gamma, domain })
    }

    pub fn zero(domain: DomainBox) -> Self {
        let n = domain.dim();
        AffineObject { n, gamma: vec![ScalarExpr::zero(); n * n * n], domain }
    }

    pub fn component(&self, i: usize, j: usize, k: usize) -> &ScalarExpr {
        &self.gamma[i * self.n * self.n + j * self.n + k]
    }

    /// `Γⁱⱼₖ(x)`
    pub fn gamma<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        let vals = self.gamma.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?;
        let n = self.n;
        Ok(TensorBlock::from_fn(n, &[Upper, Lower, Lower], |i| vals[i[0] * n * n + i[1] * n + i[2]])
            .with_symmetry(1, 2, Symmetric))
    }

    /// `∂ₐΓ` for every `a`.
    pub fn gamma_partials<S: Scalar>(&self, x: &[S]) -> Result<Vec<TensorBlock<S>>> {
        (0..self.n).map(|a| Ok(self.gamma(&seeded(x, a))?.map(|v| v.eps))).collect()
    }

    /// `I(Γ)ⁱᵣⱼ,ₖ = [∂ᵣΓⁱⱼₖ + ΓⁱⱼₐΓᵃᵣₖ]₍ᵣⱼ₎`
    pub fn integrability<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        let n = self.n;
        let g = self.gamma(x)?;
        let dg = self.gamma_partials(x)?;
        let half = |i: usize, r: usize, j: usize, k: usize| {
            let mut acc = dg[r].get(&[i, j, k]);
            for a in 0..n {
                acc += g.get(&[i, j, a]) * g.get(&[a, r, k]);
            }
            acc
        };
        Ok(TensorBlock::from_fn(n, &[Upper, Lower, Lower, Lower], |idx| {
            let (i, r, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            half(i, r, j, k) - half(i, j, r, k)
        })
        .with_symmetry(1, 2, Antisymmetric))
    }

    /// `ξⁱⱼₖ = ∂ₐΓⁱⱼₖξᵃ + Γⁱₖₐξᵃⱼ + Γⁱⱼₐξᵃₖ − ξⁱₐΓᵃⱼₖ`
    pub fn eps_lift_jet<S: Scalar>(&self, xi: &JetVector<S>, x: &[S]) -> Result<JetVector<S>> {
        let n = self.n;
        let xi1 = xi.xi1()?;
        let g = self.gamma(x)?;
        let dg = self.gamma_partials(x)?;
        let mut xi2 = vec![S::zero(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let mut acc = S::zero();
                    for a in 0..n {
                        acc += dg[a].get(&[i, j, k]) * xi.xi0[a];
                        acc += g.get(&[i, k, a]) * xi1[(a, j)];
                        acc += g.get(&[i, j, a]) * xi1[(a, k)];
                        acc -= xi1[(i, a)] * g.get(&[a, j, k]);
                    }
                    xi2[i * n * n + j * n + k] = acc;
                    xi2[i * n * n + k * n + j] = acc;
                }
            }
        }
        JetVector::order2(xi.xi0.clone(), xi1.clone(), xi2)
    }

    /// `f̄ⁱⱼₖ = Γⁱₐᵦ(y) f̄ᵃⱼ f̄ᵝₖ − Γᵃⱼₖ(x) f̄ⁱₐ`, written for `j ≤ k` and
    /// mirrored so the result is exactly symmetric.
    pub fn lift_f2<S: Scalar>(&self, x: &[S], y: &[S], f1: &Matrix<S>) -> Result<Vec<S>> {
        let n = self.n;
        let gx = self.gamma(x)?;
        let gy = self.gamma(y)?;
        let mut f2 = vec![S::zero(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let mut acc = S::zero();
                    for a in 0..n {
                        for b in 0..n {
                            acc += gy.get(&[i, a, b]) * f1[(a, j)] * f1[(b, k)];
                        }
                        acc -= gx.get(&[a, j, k]) * f1[(i, a)];
                    }
                    f2[i * n * n + j * n + k] = acc;
                    f2[i * n * n + k * n + j] = acc;
                }
            }
        }
        Ok(f2)
    }

    fn check(&self, x: &Point) -> Result<()> {
        self.domain.check(x.coords())
    }
}

/// The 2-arrow of the affine structure above a 1-arrow.
pub fn eps_lift_arrow_affine(a: &AffineObject, arrow: &OneArrow) -> Result<TwoArrow> {
    a.check(&arrow.source)?;
    a.check(&arrow.target)?;
    let f2 = a.lift_f2(arrow.source.coords(), arrow.target.coords(), arrow.f1())?;
    TwoArrow::new(arrow.clone(), f2)
}

/// Largest component of `Γ(y)f̄f̄ − Γ(x)f̄ − f̄₂`; zero for arrows that
/// preserve `Γ`.
pub fn affine_membership_residual(a: &AffineObject, arrow: &TwoArrow) -> Result<f64> {
    let n = a.n;
    let (x, y) = (arrow.first.source.coords(), arrow.first.target.coords());
    let f1 = arrow.first.f1();
    let gx = a.gamma(x)?;
    let gy = a.gamma(y)?;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut lhs = 0.0;
                let mut rhs = arrow.f2(i, j, k);
                for p in 0..n {
                    for q in 0..n {
                        lhs += gy.get(&[i, p, q]) * f1[(p, j)] * f1[(q, k)];
                    }
                    rhs += gx.get(&[p, j, k]) * f1[(i, p)];
                }
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

pub fn integrability_affine(a: &AffineObject, x: &Point) -> Result<TensorBlock> {
    a.check(x)?;
    a.integrability(x.coords())
}

/// `R(x, y, f1) = I(Γ; y) − (x, y, f1)₊ I(Γ; x)`; `f1` is free here.
pub fn nonlinear_curvature_affine(a: &AffineObject, x: &Point, y: &Point, f1: &Matrix) -> Result<TensorBlock> {
    a.check(x)?;
    a.check(y)?;
    let arrow = OneArrow::new(x.clone(), y.clone(), f1.clone())?;
    let pushed = pushforward_tensor(&arrow, &a.integrability(x.coords())?)?;
    a.integrability(y.coords())?.sub(&pushed)
}

pub fn eps_lift_jet_affine(a: &AffineObject, xi: &JetVector, x: &Point) -> Result<JetVector> {
    a.check(x)?;
    a.eps_lift_jet(xi, x.coords())
}

/// `𝔯(ξ₁) = L_{εξ₁} I(Γ)` at `x`.
pub fn linear_curvature_affine(a: &AffineObject, xi: &JetVector, x: &Point) -> Result<TensorBlock> {
    let lifted = eps_lift_jet_affine(a, xi, x)?;
    formal_lie_derivative(&lifted, &IntegrabilityAffine(a), x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatnessVerdict {
    pub flat: bool,
    pub max_residual: f64,
    pub samples: usize,
    pub tol: f64,
}

/// Flat iff `max ‖I(Γ)‖ ≤ tol` over quasi-random samples.
pub fn is_flat_affine(a: &AffineObject, samples: usize, tol: f64, seed: u64) -> Result<FlatnessVerdict> {
    let mut worst: f64 = 0.0;
    for p in QuasiSampler::new(&a.domain, seed).take(samples) {
        worst = worst.max(a.integrability(p.coords())?.norm());
    }
    Ok(FlatnessVerdict { flat: worst <= tol, max_residual: worst, samples, tol })
}

/// Pull `Γ` back through `y = f(x)`:
/// `Γᵃⱼₖ(x) = (∂f⁻¹)ᵃᵢ [Γⁱᵦ꜀(f(x)) ∂ⱼfᵝ ∂ₖf꜀ − ∂ⱼ∂ₖfⁱ]`.
///
/// `source` is the chart box of `x`; `f` must map it into `a`'s domain.
pub fn transform_by_diffeo(a: &AffineObject, f: &[ScalarExpr], source: DomainBox) -> Result<AffineObject> {
    let n = a.n;
    if f.len() != n || source.dim() != n {
        return Err(GeometryError::Dimension("diffeomorphism and Γ dimensions differ".into()));
    }
    let jac: Vec<Vec<ScalarExpr>> = (0..n).map(|i| (0..n).map(|j| f[i].diff(j)).collect()).collect();
    let inv = symbolic_inverse(&jac);
    let moved: Vec<ScalarExpr> = a.gamma.iter().map(|e| e.substitute(f)).collect();
    let at = |i: usize, j: usize, k: usize| i * n * n + j * n + k;
    let mut out = vec![ScalarExpr::zero(); n * n * n];
    for j in 0..n {
        for k in j..n {
            let inner: Vec<ScalarExpr> = (0..n)
                .map(|i| {
                    let mut acc = ScalarExpr::zero() - jac[i][j].diff(k);
                    for b in 0..n {
                        for c in 0..n {
                            acc = acc + moved[at(i, b, c)].clone() * jac[b][j].clone() * jac[c][k].clone();
                        }
                    }
                    acc
                })
                .collect();
            for p in 0..n {
                let mut acc = ScalarExpr::zero();
                for i in 0..n {
                    acc = acc + inv[p][i].clone() * inner[i].clone();
                }
                out[at(p, k, j)] = acc.clone();
                out[at(p, j, k)] = acc;
            }
        }
    }
    AffineObject::new(out, source)
}

/// `x ↦ I(Γ; x)`
pub struct IntegrabilityAffine<'a>(pub &'a AffineObject);

impl TensorField for IntegrabilityAffine<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        self.0.integrability(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::sampling::{random_invertible, random_jet, rng};

    fn e(s: &str) -> ScalarExpr {
        ScalarExpr::parse_in(s, 2).unwrap()
    }

    fn pullback_flat() -> AffineObject {
        let f = vec![e("x1 + x2^2"), e("x2")];
        transform_by_diffeo(&AffineObject::zero(DomainBox::cube(2, -3.0, 3.0)), &f, DomainBox::cube(2, -1.0, 1.0))
            .unwrap()
    }

    #[test]
    fn asymmetric_gamma_rejected() {
        let mut g = vec![e("0"); 8];
        g[1] = e("x1");
        let r = AffineObject::new(g, DomainBox::cube(2, -1.0, 1.0));
        assert!(matches!(r, Err(GeometryError::Symmetry(_))));
    }

    #[test]
    fn reordered_but_equal_components_accepted() {
        let mut g = vec![e("0"); 8];
        g[1] = e("x1*x2");
        g[2] = e("x2*x1");
        assert!(AffineObject::new(g, DomainBox::cube(2, -1.0, 1.0)).is_ok());
    }

    #[test]
    fn pulled_back_zero_is_flat_but_nonzero() {
        let a = pullback_flat();
        let g = a.gamma(&[0.2_f64, 0.3]).unwrap();
        assert!((g.get(&[0, 1, 1]) + 2.0).abs() < 1e-14);
        let v = is_flat_affine(&a, 50, 1e-9, 1).unwrap();
        assert!(v.flat && v.max_residual == 0.0);
    }

    #[test]
    fn lifts_vanish_for_zero_gamma() {
        let a = AffineObject::zero(DomainBox::cube(2, -1.0, 1.0));
        let mut r = rng(5, 0);
        let x = Point(vec![0.1, 0.2]);
        let arrow = OneArrow::new(x.clone(), Point(vec![-0.3, 0.4]), random_invertible(2, 0.5, &mut r)).unwrap();
        let two = eps_lift_arrow_affine(&a, &arrow).unwrap();
        assert!(two.f2_components().iter().all(|v| *v == 0.0));
        let jet = eps_lift_jet_affine(&a, &random_jet(2, 1, &mut r), &x).unwrap();
        assert!(jet.xi2().unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_arrow_lifts_to_zero_f2() {
        let a = pullback_flat();
        let x = Point(vec![0.1, 0.2]);
        let two = eps_lift_arrow_affine(&a, &OneArrow::identity(x)).unwrap();
        assert!(two.f2_components().iter().all(|v| *v == 0.0));
    }
}
