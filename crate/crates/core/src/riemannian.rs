//! Riemannian pairs `(g, Γ)`: integrability objects, paired curvature,
//! constant-curvature fit and the flatness classifier.

use nalgebra::{Cholesky, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::affine::{AffineObject, FlatnessVerdict};
use crate::chart::expr::symbolic_inverse;
use crate::chart::lie::{formal_lie_derivative_pair, JetFormField, JetVector, TensorField};
use crate::chart::sampling::{gaussian_matrix, gaussian_vec, random_orthogonal, rng, QuasiSampler};
use crate::chart::scalar::{Dual, Scalar};
use crate::chart::tensor::SymmetryKind::{Antisymmetric, Symmetric};
use crate::chart::tensor::Variance::{Lower, Upper};
use crate::chart::{
    pushforward_jet2form, DomainBox, JetValued2Form, Matrix, OneArrow, Point, ScalarExpr, TensorBlock, TwoArrow,
};
use crate::error::{GeometryError, Result};

/// Metrics whose smallest eigenvalue is at or below this are degenerate.
pub const MIN_EIGENVALUE: f64 = 1e-10;
/// Tolerance for `g(y)(f1·, f1·) = g(x)` and for the linearized condition.
pub const METRIC_TOLERANCE: f64 = 1e-9;
/// `‖R̄‖` below this cannot serve as a fit reference.
pub const REFERENCE_FLOOR: f64 = 1e-12;

/// A metric `gᵢⱼ(x)` together with an independent `Γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricPair {
    pub n: usize,
    /// Row-major, symmetric.
    pub g: Vec<ScalarExpr>,
    pub gamma: AffineObject,
}

fn seeded<S: Scalar>(x: &[S], a: usize) -> Vec<Dual<S>> {
    x.iter().enumerate().map(|(k, v)| Dual::new(*v, if k == a { S::one() } else { S::zero() })).collect()
}

fn min_eigenvalue(m: &Matrix) -> f64 {
    SymmetricEigen::new(m.to_nalgebra()).eigenvalues.min()
}

impl MetricPair {
    /// `g` is checked for symmetry at a spread of points and then stored with
    /// the `i ≤ j` expression in both places.
    pub fn new(g: Vec<ScalarExpr>, gamma: AffineObject) -> Result<Self> {
        let n = gamma.n;
        if g.len() != n * n {
            return Err(GeometryError::Schema(format!("g needs {} components, got {}", n * n, g.len())));
        }
        let probes = QuasiSampler::new(&gamma.domain, 0).take(16);
        let mut g = g;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (&g[i * n + j], &g[j * n + i]);
                if a != b {
                    for p in &probes {
                        let (Ok(u), Ok(v)) = (a.eval(p.coords()), b.eval(p.coords())) else {
                            continue;
                        };
                        if (u - v).abs() > 1e-12 * u.abs().max(v.abs()).max(1.0) {
                            return Err(GeometryError::Symmetry(format!(
                                "g_{}{} = {a} differs from g_{}{} = {b}",
                                i + 1,
                                j + 1,
                                j + 1,
                                i + 1
                            )));
                        }
                    }
                }
                g[j * n + i] = g[i * n + j].clone();
            }
        }
        Ok(MetricPair { n, g, gamma })
    }

    /// The pair `(g, Levi-Civita Γ of g)`.
    pub fn levi_civita(g: Vec<ScalarExpr>, domain: DomainBox) -> Result<Self> {
        let gamma = levi_civita_gamma(&g, domain)?;
        MetricPair::new(g, gamma)
    }

    pub fn domain(&self) -> &DomainBox {
        &self.gamma.domain
    }

    pub fn metric<S: Scalar>(&self, x: &[S]) -> Result<Matrix<S>> {
        let vals = self.g.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_fn(self.n, |i, j| vals[i * self.n + j]))
    }

    /// `gⁱʲ(x)`
    pub fn metric_inverse<S: Scalar>(&self, x: &[S]) -> Result<Matrix<S>> {
        self.metric(x)?.inverse().ok_or_else(|| GeometryError::DegenerateMetric {
            point: x.iter().map(|v| v.re()).collect(),
            min_eigenvalue: 0.0,
        })
    }

    /// `∂ₐg` for every `a`.
    pub fn metric_partials<S: Scalar>(&self, x: &[S]) -> Result<Vec<Matrix<S>>> {
        (0..self.n).map(|a| Ok(self.metric(&seeded(x, a))?.map(|v| v.eps))).collect()
    }

    /// Domain and positive-definiteness check at a real point.
    pub fn check(&self, x: &Point) -> Result<()> {
        self.domain().check(x.coords())?;
        let lam = min_eigenvalue(&self.metric(x.coords())?);
        if !(lam > MIN_EIGENVALUE) {
            return Err(GeometryError::DegenerateMetric { point: x.0.clone(), min_eigenvalue: lam });
        }
        Ok(())
    }

    /// `Γ̃ᵏᵣⱼ = −½ gᵏᵃ(∂ᵣgⱼₐ − ∂ₐgᵣⱼ + ∂ⱼgₐᵣ)`, in the sign convention of the
    /// transformation law for `Γ`.
    pub fn christoffel<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        let n = self.n;
        let gi = self.metric_inverse(x)?;
        let dg = self.metric_partials(x)?;
        Ok(TensorBlock::from_fn(n, &[Upper, Lower, Lower], |idx| {
            let (k, r, j) = (idx[0], idx[1], idx[2]);
            let mut acc = S::zero();
            for a in 0..n {
                acc += gi[(k, a)] * (dg[r][(j, a)] - dg[a][(r, j)] + dg[j][(a, r)]);
            }
            acc.scale(-0.5)
        })
        .with_symmetry(1, 2, Symmetric))
    }

    /// `∇ᵣgⱼₖ = ∂ᵣgⱼₖ + gⱼₐΓᵃᵣₖ + gₖₐΓᵃᵣⱼ` with the pair's own `Γ`.
    pub fn nabla_g<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        let n = self.n;
        let g = self.metric(x)?;
        let dg = self.metric_partials(x)?;
        let gam = self.gamma.gamma(x)?;
        Ok(TensorBlock::from_fn(n, &[Lower, Lower, Lower], |idx| {
            let (r, j, k) = (idx[0], idx[1], idx[2]);
            let mut acc = dg[r][(j, k)];
            for a in 0..n {
                acc += g[(j, a)] * gam.get(&[a, r, k]) + g[(k, a)] * gam.get(&[a, r, j]);
            }
            acc
        })
        .with_symmetry(1, 2, Symmetric))
    }

    /// `I₁ᵏᵣⱼ = [gᵃᵏ(∂ᵣgⱼₐ + gⱼᵦΓᵝᵣₐ)]₍ᵣⱼ₎`
    pub fn i1<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        let n = self.n;
        let g = self.metric(x)?;
        let gi = self.metric_inverse(x)?;
        let dg = self.metric_partials(x)?;
        let gam = self.gamma.gamma(x)?;
        let half = |k: usize, r: usize, j: usize| {
            let mut acc = S::zero();
            for a in 0..n {
                let mut inner = dg[r][(j, a)];
                for b in 0..n {
                    inner += g[(j, b)] * gam.get(&[b, r, a]);
                }
                acc += gi[(a, k)] * inner;
            }
            acc
        };
        Ok(TensorBlock::from_fn(n, &[Upper, Lower, Lower], |idx| {
            half(idx[0], idx[1], idx[2]) - half(idx[0], idx[2], idx[1])
        })
        .with_symmetry(1, 2, Antisymmetric))
    }

    /// `I₂`, the integrability object of the pair's `Γ`.
    pub fn i2<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        self.gamma.integrability(x)
    }

    pub fn full_i<S: Scalar>(&self, x: &[S]) -> Result<JetValued2Form<S>> {
        JetValued2Form::new(self.i1(x)?, self.i2(x)?)
    }

    /// Largest entry of `g(y)(f1·, f1·) − g(x)`.
    pub fn metric_arrow_residual(&self, arrow: &OneArrow) -> Result<f64> {
        let gx = self.metric(arrow.source.coords())?;
        let gy = self.metric(arrow.target.coords())?;
        let f = arrow.f1();
        Ok(f.transpose().mul(&gy).mul(f).max_abs_diff(&gx))
    }

    /// Largest entry of `∂ₐgⱼₖξᵃ + gₖₐξᵃⱼ + gⱼₐξᵃₖ`.
    pub fn metric_jet_residual(&self, xi: &JetVector, x: &[f64]) -> Result<f64> {
        let n = self.n;
        let xi1 = xi.xi1()?;
        let g = self.metric(x)?;
        let dg = self.metric_partials(x)?;
        let gx = g.mul(xi1);
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let mut v = gx[(k, j)] + gx[(j, k)];
                for a in 0..n {
                    v += dg[a][(j, k)] * xi.xi0[a];
                }
                worst = worst.max(v.abs());
            }
        }
        Ok(worst)
    }
}

/// Levi-Civita `Γ` of a metric given by expressions, built symbolically in
/// the same sign convention as [`MetricPair::christoffel`].
pub fn levi_civita_gamma(g: &[ScalarExpr], domain: DomainBox) -> Result<AffineObject> {
    let n = domain.dim();
    if g.len() != n * n {
        return Err(GeometryError::Schema(format!("g needs {} components, got {}", n * n, g.len())));
    }
    let rows: Vec<Vec<ScalarExpr>> = (0..n).map(|i| g[i * n..(i + 1) * n].to_vec()).collect();
    let gi = symbolic_inverse(&rows);
    let dg: Vec<Vec<Vec<ScalarExpr>>> =
        (0..n).map(|a| rows.iter().map(|r| r.iter().map(|e| e.diff(a)).collect()).collect()).collect();
    let mut out = vec![ScalarExpr::zero(); n * n * n];
    for k in 0..n {
        for r in 0..n {
            for j in r..n {
                let mut acc = ScalarExpr::zero();
                for a in 0..n {
                    let bracket = dg[r][j][a].clone() - dg[a][r][j].clone() + dg[j][a][r].clone();
                    acc = acc + gi[k][a].clone() * bracket;
                }
                let c = ScalarExpr::constant(-0.5) * acc;
                out[k * n * n + j * n + r] = c.clone();
                out[k * n * n + r * n + j] = c;
            }
        }
    }
    AffineObject::new(out, domain)
}

pub fn christoffel(m: &MetricPair, x: &Point) -> Result<TensorBlock> {
    m.check(x)?;
    m.christoffel(x.coords())
}

pub fn nabla_g(m: &MetricPair, x: &Point) -> Result<TensorBlock> {
    m.domain().check(x.coords())?;
    m.nabla_g(x.coords())
}

#[allow(non_snake_case)]
pub fn I1(m: &MetricPair, x: &Point) -> Result<TensorBlock> {
    m.check(x)?;
    m.i1(x.coords())
}

#[allow(non_snake_case)]
pub fn I2(m: &MetricPair, x: &Point) -> Result<TensorBlock> {
    m.domain().check(x.coords())?;
    m.i2(x.coords())
}

pub fn full_i(m: &MetricPair, x: &Point) -> Result<JetValued2Form> {
    m.check(x)?;
    m.full_i(x.coords())
}

/// The 2-arrow above `arrow`; with `enforce_metric`, the arrow must preserve
/// `g` to [`METRIC_TOLERANCE`].
pub fn eps_lift_arrow_riem(m: &MetricPair, arrow: &OneArrow, enforce_metric: bool) -> Result<TwoArrow> {
    m.check(&arrow.source)?;
    m.check(&arrow.target)?;
    if enforce_metric {
        let residual = m.metric_arrow_residual(arrow)?;
        if residual > METRIC_TOLERANCE {
            return Err(GeometryError::NotMetricArrow { residual });
        }
    }
    let f2 = m.gamma.lift_f2(arrow.source.coords(), arrow.target.coords(), arrow.f1())?;
    TwoArrow::new(arrow.clone(), f2)
}

/// Upper-triangular `C` with `g = CᵀC`.
fn metric_factor(m: &MetricPair, x: &Point) -> Result<Matrix> {
    let g = m.metric(x.coords())?;
    let chol = Cholesky::new(g.to_nalgebra())
        .ok_or_else(|| GeometryError::DegenerateMetric { point: x.0.clone(), min_eigenvalue: min_eigenvalue(&g) })?;
    Ok(Matrix::from_nalgebra(&chol.l().transpose()))
}

/// A metric arrow `f1 = C(y)⁻¹·Q·C(x)` with `Q` a seeded random orthogonal
/// matrix, so that `f1ᵀ g(y) f1 = g(x)`.
pub fn metric_arrow_sampler(m: &MetricPair, x: &Point, y: &Point, seed: u64) -> Result<OneArrow> {
    let q = random_orthogonal(m.n, &mut rng(seed, 0xa77));
    metric_arrow_with(m, x, y, &q)
}

/// As [`metric_arrow_sampler`] with a given orthogonal factor.
pub fn metric_arrow_with(m: &MetricPair, x: &Point, y: &Point, q: &Matrix) -> Result<OneArrow> {
    m.check(x)?;
    m.check(y)?;
    let cx = metric_factor(m, x)?;
    let cy_inv = metric_factor(m, y)?
        .inverse()
        .ok_or(GeometryError::DegenerateMetric { point: y.0.clone(), min_eigenvalue: 0.0 })?;
    OneArrow::new(x.clone(), y.clone(), cy_inv.mul(q).mul(&cx))
}

/// `R(x, y, f1) = I(g; y) − ε(x, y, f1)₊ I(g; x)` on metric arrows.
pub fn riemann_curvature_pair(m: &MetricPair, x: &Point, y: &Point, f1: &Matrix) -> Result<JetValued2Form> {
    let arrow = OneArrow::new(x.clone(), y.clone(), f1.clone())?;
    let lifted = eps_lift_arrow_riem(m, &arrow, true)?;
    let pushed = pushforward_jet2form(&lifted, &m.full_i(x.coords())?)?;
    m.full_i(y.coords())?.sub(&pushed)
}

/// A random 1-jet satisfying the linearized metric condition at `x`:
/// `ξ₁ = g⁻¹(−S/2 + A)` with `Sⱼₖ = ∂ₐgⱼₖξᵃ` and `A` antisymmetric.
pub fn metric_jet_sampler<R: Rng>(m: &MetricPair, x: &Point, r: &mut R) -> Result<JetVector> {
    m.check(x)?;
    let n = m.n;
    let xi0 = gaussian_vec(n, r);
    let b = gaussian_matrix(n, r);
    let a = b.sub(&b.transpose()).scale(0.5);
    let dg = m.metric_partials(x.coords())?;
    let s = Matrix::from_fn(n, |j, k| (0..n).map(|c| dg[c][(j, k)] * xi0[c]).sum());
    let xi1 = m.metric_inverse(x.coords())?.mul(&s.scale(-0.5).add(&a));
    JetVector::order1(xi0, xi1)
}

/// `L_{εξ₁} I(g)` for a 1-jet satisfying the linearized metric condition,
/// extended to second order by the affine splitting.
pub fn linear_curvature_riem(m: &MetricPair, xi: &JetVector, x: &Point) -> Result<JetValued2Form> {
    m.check(x)?;
    let residual = m.metric_jet_residual(xi, x.coords())?;
    if residual > METRIC_TOLERANCE * xi.norm().max(1.0) {
        return Err(GeometryError::NotMetricJet { residual });
    }
    let lifted = m.gamma.eps_lift_jet(xi, x.coords())?;
    formal_lie_derivative_pair(&lifted, &FullI(m), x)
}

/// 1-flat iff `max ‖Γ − Γ̃‖ ≤ tol` over samples.
pub fn is_one_flat(m: &MetricPair, samples: usize, tol: f64, seed: u64) -> Result<FlatnessVerdict> {
    let mut worst: f64 = 0.0;
    for p in QuasiSampler::new(m.domain(), seed).take(samples) {
        m.check(&p)?;
        let d = m.gamma.gamma(p.coords())?.distance(&m.christoffel(p.coords())?)?;
        worst = worst.max(d);
    }
    Ok(FlatnessVerdict { flat: worst <= tol, max_residual: worst, samples, tol })
}

/// `R_{kj,lm} = g_{li} I₂ⁱ_{kj,m}`
pub fn lower_i2(m: &MetricPair, x: &Point) -> Result<TensorBlock> {
    m.check(x)?;
    let g = m.metric(x.coords())?;
    let i2 = m.i2(x.coords())?;
    let n = m.n;
    Ok(TensorBlock::from_fn(n, &[Lower; 4], |idx| {
        let (k, j, l, mm) = (idx[0], idx[1], idx[2], idx[3]);
        (0..n).map(|i| g[(l, i)] * i2.get(&[i, k, j, mm])).sum()
    }))
}

/// `R̄_{kj,lm} = g_{lk}g_{jm} − g_{lj}g_{km}`
pub fn reference_tensor(g: &Matrix) -> TensorBlock {
    TensorBlock::from_fn(g.dim(), &[Lower; 4], |idx| {
        let (k, j, l, m) = (idx[0], idx[1], idx[2], idx[3]);
        g[(l, k)] * g[(j, m)] - g[(l, j)] * g[(k, m)]
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointFit {
    pub point: Vec<f64>,
    pub c: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureFit {
    pub points: Vec<PointFit>,
    pub c_min: f64,
    pub c_max: f64,
    pub spread: f64,
    pub max_residual: f64,
}

/// Least-squares `c` in `R_{kj,lm} = c·R̄_{kj,lm}` at one point.
pub fn fit_point(m: &MetricPair, x: &Point) -> Result<PointFit> {
    let r = lower_i2(m, x)?;
    let rbar = reference_tensor(&m.metric(x.coords())?);
    let norm2: f64 = rbar.components().iter().map(|v| v * v).sum();
    if norm2.sqrt() < REFERENCE_FLOOR {
        return Err(GeometryError::ZeroReference { norm: norm2.sqrt() });
    }
    let dot: f64 = r.components().iter().zip(rbar.components()).map(|(a, b)| a * b).sum();
    let c = dot / norm2;
    let residual = r.sub(&rbar.scale(c))?.norm() / norm2.sqrt();
    Ok(PointFit { point: x.0.clone(), c, residual })
}

pub fn constant_curvature_fit(m: &MetricPair, samples: usize, seed: u64) -> Result<CurvatureFit> {
    let points = QuasiSampler::new(m.domain(), seed)
        .take(samples)
        .iter()
        .map(|p| fit_point(m, p))
        .collect::<Result<Vec<_>>>()?;
    let c_min = points.iter().map(|p| p.c).fold(f64::INFINITY, f64::min);
    let c_max = points.iter().map(|p| p.c).fold(f64::NEG_INFINITY, f64::max);
    let max_residual = points.iter().map(|p| p.residual).fold(0.0, f64::max);
    Ok(CurvatureFit { points, c_min, c_max, spread: c_max - c_min, max_residual })
}

/// Residuals of `R_{kj,lm} = −R_{jk,lm}`, `R_{kj,lm} = −R_{kj,ml}` and
/// `R_{kj,lm} + R_{lk,jm} + R_{jl,km} = 0`.
pub fn curvature_identities_check(r: &TensorBlock) -> Result<[f64; 3]> {
    if r.rank() != 4 {
        return Err(GeometryError::Dimension("curvature identities need a valence-4 block".into()));
    }
    let n = r.dim();
    let mut out = [0.0_f64; 3];
    for k in 0..n {
        for j in 0..n {
            for l in 0..n {
                for m in 0..n {
                    let v = r.get(&[k, j, l, m]);
                    out[0] = out[0].max((v + r.get(&[j, k, l, m])).abs());
                    out[1] = out[1].max((v + r.get(&[k, j, m, l])).abs());
                    out[2] = out[2].max((v + r.get(&[l, k, j, m]) + r.get(&[j, l, k, m])).abs());
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Classification {
    FlatPHG,
    OneFlatNonconstant,
    NotOneFlat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub class: Classification,
    pub one_flat: FlatnessVerdict,
    pub fit: Option<CurvatureFit>,
}

pub fn classify(m: &MetricPair, samples: usize, tol: f64, seed: u64) -> Result<ClassifyReport> {
    let one_flat = is_one_flat(m, samples, tol, seed)?;
    if !one_flat.flat {
        return Ok(ClassifyReport { class: Classification::NotOneFlat, one_flat, fit: None });
    }
    let fit = constant_curvature_fit(m, samples, seed)?;
    let class = if fit.max_residual <= tol && fit.spread <= tol {
        Classification::FlatPHG
    } else {
        Classification::OneFlatNonconstant
    };
    Ok(ClassifyReport { class, one_flat, fit: Some(fit) })
}

/// `x ↦ (I₁, I₂)`
pub struct FullI<'a>(pub &'a MetricPair);

impl JetFormField for FullI<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<JetValued2Form<S>> {
        self.0.full_i(x)
    }
}

/// `x ↦ I₁`
pub struct I1Field<'a>(pub &'a MetricPair);

impl TensorField for I1Field<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<TensorBlock<S>> {
        self.0.i1(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> ScalarExpr {
        ScalarExpr::parse_in(s, 2).unwrap()
    }

    fn euclid() -> MetricPair {
        MetricPair::new(vec![e("1"), e("0"), e("0"), e("1")], AffineObject::zero(DomainBox::cube(2, -1.0, 1.0)))
            .unwrap()
    }

    fn sphere() -> MetricPair {
        let c = "4/(1+x1^2+x2^2)^2";
        MetricPair::levi_civita(vec![e(c), e("0"), e("0"), e(c)], DomainBox::cube(2, -1.0, 1.0)).unwrap()
    }

    #[test]
    fn euclidean_christoffels_vanish() {
        assert_eq!(christoffel(&euclid(), &Point(vec![0.3, 0.1])).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn sphere_christoffels_vanish_at_origin() {
        assert!(christoffel(&sphere(), &Point(vec![0.0, 0.0])).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn symbolic_and_numeric_christoffels_agree() {
        let m = sphere();
        let x = [0.4, -0.3];
        let a = m.gamma.gamma(&x).unwrap();
        let b = m.christoffel(&x).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-14);
    }

    #[test]
    fn scaling_arrow_is_not_metric() {
        let x = Point(vec![0.0, 0.0]);
        let a = OneArrow::new(x.clone(), x, Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]])).unwrap();
        assert!(matches!(eps_lift_arrow_riem(&euclid(), &a, true), Err(GeometryError::NotMetricArrow { .. })));
    }

    #[test]
    fn reference_tensor_satisfies_identities() {
        let g = Matrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]);
        let r = curvature_identities_check(&reference_tensor(&g)).unwrap();
        assert!(r.iter().all(|v| *v <= 1e-15));
    }

    #[test]
    fn sphere_fit_sign() {
        let f = fit_point(&sphere(), &Point(vec![0.2, 0.5])).unwrap();
        assert!((f.c + 1.0).abs() < 1e-10, "c = {}", f.c);
    }
}
