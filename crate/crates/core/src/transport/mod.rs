//! Path transport for the three first-order systems, loop holonomy and the
//! three-route flatness certificate.

mod certify;
mod holonomy;

pub use certify::{
    certify_flat, companion_point, default_loop_size, max_integrability, max_linear_curvature, max_nonlinear_curvature,
    sample_loops, Certificate, CertifyOptions, Evidence, Verdict,
};
pub use holonomy::{loop_defect, loop_defect_with, HolonomyReport, LoopKind, LoopStart};

use serde::Serialize;

use crate::affine::AffineObject;
use crate::chart::arrow::DET_TOLERANCE;
use crate::chart::{DomainBox, Matrix, Point};
use crate::error::{GeometryError, Result};
use crate::parallelism::StructureObjectW;
use crate::riemannian::{MetricPair, METRIC_TOLERANCE};

/// Fixed RK4 step count per unit of arc length.
pub const STEPS_PER_UNIT: usize = 512;

/// A polyline, or an axis-aligned rectangle loop in the `(j, k)` coordinate
/// plane (zero-based) that goes `+h1·e_j`, `+h2·e_k`, `−h1·e_j`, `−h2·e_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PathSpec {
    Polyline(Vec<Point>),
    Rectangle { corner: Point, h1: f64, h2: f64, plane: (usize, usize) },
}

impl PathSpec {
    pub fn segment(a: Point, b: Point) -> Self {
        PathSpec::Polyline(vec![a, b])
    }

    pub fn square(corner: Point, h: f64, plane: (usize, usize)) -> Self {
        PathSpec::Rectangle { corner, h1: h, h2: h, plane }
    }

    pub fn vertices(&self) -> Vec<Point> {
        match self {
            PathSpec::Polyline(v) => v.clone(),
            PathSpec::Rectangle { corner, h1, h2, plane } => {
                let n = corner.dim();
                let e = |i: usize| -> Vec<f64> { (0..n).map(|d| if d == i { 1.0 } else { 0.0 }).collect() };
                let a = corner.clone();
                let b = a.offset(&e(plane.0), *h1);
                let c = b.offset(&e(plane.1), *h2);
                let d = a.offset(&e(plane.1), *h2);
                vec![a.clone(), b, c, d, a]
            }
        }
    }

    pub fn length(&self) -> f64 {
        self.vertices().windows(2).map(|w| dist(&w[0], &w[1])).sum()
    }

    /// `self` followed by `other`; the end of `self` must be the start of `other`.
    pub fn concat(&self, other: &PathSpec) -> Result<PathSpec> {
        let mut a = self.vertices();
        let b = other.vertices();
        match (a.last(), b.first()) {
            (Some(end), Some(start)) if dist(end, start) <= 1e-12 => {}
            _ => return Err(GeometryError::Dimension("paths do not join".into())),
        }
        a.extend(b.into_iter().skip(1));
        Ok(PathSpec::Polyline(a))
    }

    fn check(&self, domain: &DomainBox) -> Result<Vec<Point>> {
        let v = self.vertices();
        if v.len() < 2 {
            return Err(GeometryError::Dimension("a path needs at least two vertices".into()));
        }
        for p in &v {
            if p.dim() != domain.dim() {
                return Err(GeometryError::Dimension("path and chart dimensions differ".into()));
            }
            if !domain.contains(p.coords()) {
                return Err(GeometryError::DomainEscape { point: p.0.clone() });
            }
        }
        Ok(v)
    }
}

fn dist(a: &Point, b: &Point) -> f64 {
    a.0.iter().zip(&b.0).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Terminal state of the affine system: `f⁰` and `f1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AffineState {
    pub f0: Point,
    pub f1: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TransportState {
    Parallelism { y: Point },
    Linear { xi0: Vec<f64> },
    Affine(AffineState),
}

/// Fixed-step classical RK4 over a path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stepper {
    pub steps_per_unit: usize,
}

impl Default for Stepper {
    fn default() -> Self {
        Stepper { steps_per_unit: STEPS_PER_UNIT }
    }
}

fn axpy(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u + t * v).collect()
}

fn escape(domain: &DomainBox, p: &[f64]) -> Result<()> {
    if domain.contains(p) {
        Ok(())
    } else {
        Err(GeometryError::DomainEscape { point: p.to_vec() })
    }
}

impl Stepper {
    pub fn new(steps_per_unit: usize) -> Self {
        Stepper { steps_per_unit }
    }

    /// Integrates `du/ds = rhs(x(s), ẋ, u)` segment by segment; `after_step`
    /// sees every accepted state.
    fn run(
        &self,
        vertices: &[Point],
        u0: Vec<f64>,
        rhs: impl Fn(&[f64], &[f64], &[f64]) -> Result<Vec<f64>>,
        mut after_step: impl FnMut(&[f64], &[f64]) -> Result<()>,
    ) -> Result<Vec<f64>> {
        let mut u = u0;
        for seg in vertices.windows(2) {
            let (a, b) = (seg[0].coords(), seg[1].coords());
            let v: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
            let len = dist(&seg[0], &seg[1]);
            if len == 0.0 {
                continue;
            }
            let steps = ((self.steps_per_unit as f64 * len).ceil() as usize).max(1);
            let h = 1.0 / steps as f64;
            for s in 0..steps {
                let s0 = s as f64 * h;
                let x0 = axpy(a, s0, &v);
                let xm = axpy(a, s0 + 0.5 * h, &v);
                let x1 = axpy(a, s0 + h, &v);
                let k1 = rhs(&x0, &v, &u)?;
                let k2 = rhs(&xm, &v, &axpy(&u, 0.5 * h, &k1))?;
                let k3 = rhs(&xm, &v, &axpy(&u, 0.5 * h, &k2))?;
                let k4 = rhs(&x1, &v, &axpy(&u, h, &k3))?;
                for i in 0..u.len() {
                    u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                after_step(&x1, &u)?;
            }
        }
        Ok(u)
    }

    /// `dy = w(y)·w(x)⁻¹·dx`
    pub fn parallelism(&self, w: &StructureObjectW, path: &PathSpec, y0: &Point) -> Result<Point> {
        let v = path.check(&w.domain)?;
        escape(&w.domain, y0.coords())?;
        let rhs = |x: &[f64], xdot: &[f64], y: &[f64]| {
            escape(&w.domain, y)?;
            let f1 = w.frame(y)?.mul(&w.coframe(x)?);
            Ok(f1.mul_vec(xdot))
        };
        let y = self.run(&v, y0.0.clone(), rhs, |_, y| escape(&w.domain, y))?;
        Ok(Point(y))
    }

    /// `dξⁱ = Γⁱₐⱼ(x)·ξᵃ·dxʲ`
    pub fn linear(&self, w: &StructureObjectW, path: &PathSpec, xi0: &[f64]) -> Result<Vec<f64>> {
        let n = w.n;
        if xi0.len() != n {
            return Err(GeometryError::Dimension("vector and frame dimensions differ".into()));
        }
        let v = path.check(&w.domain)?;
        let rhs = |x: &[f64], xdot: &[f64], xi: &[f64]| {
            let g = w.gamma(x)?;
            Ok((0..n)
                .map(|i| {
                    let mut acc = 0.0;
                    for a in 0..n {
                        for j in 0..n {
                            acc += g.get(&[i, a, j]) * xi[a] * xdot[j];
                        }
                    }
                    acc
                })
                .collect())
        };
        self.run(&v, xi0.to_vec(), rhs, |_, _| Ok(()))
    }

    /// The matrix `M` with `ξ_end = M·ξ_start` for the linear system.
    pub fn linear_monodromy(&self, w: &StructureObjectW, path: &PathSpec) -> Result<Matrix> {
        let n = w.n;
        let mut m = Matrix::zeros(n);
        for a in 0..n {
            let e: Vec<f64> = (0..n).map(|i| if i == a { 1.0 } else { 0.0 }).collect();
            let col = self.linear(w, path, &e)?;
            for i in 0..n {
                m[(i, a)] = col[i];
            }
        }
        Ok(m)
    }

    /// `df⁰ = f1·dx`, `df1ⁱⱼ = [Γⁱₐᵦ(f⁰)f1ᵃⱼf1ᵝₖ − Γᵃⱼₖ(x)f1ⁱₐ]dxᵏ`
    pub fn affine(&self, a: &AffineObject, path: &PathSpec, state0: &AffineState) -> Result<AffineState> {
        self.affine_observed(a, path, state0, |_, _| Ok(()))
    }

    fn affine_observed(
        &self,
        a: &AffineObject,
        path: &PathSpec,
        state0: &AffineState,
        mut observe: impl FnMut(&[f64], &AffineState) -> Result<()>,
    ) -> Result<AffineState> {
        let n = a.n;
        if state0.f0.dim() != n || state0.f1.dim() != n {
            return Err(GeometryError::Dimension("state and Γ dimensions differ".into()));
        }
        let v = path.check(&a.domain)?;
        escape(&a.domain, state0.f0.coords())?;
        let det = state0.f1.det();
        if det.abs() <= DET_TOLERANCE {
            return Err(GeometryError::SingularArrow { det });
        }
        let pack = |s: &AffineState| -> Vec<f64> { s.f0.0.iter().chain(s.f1.as_slice()).copied().collect() };
        let unpack =
            |u: &[f64]| AffineState { f0: Point(u[..n].to_vec()), f1: Matrix::from_fn(n, |i, j| u[n + i * n + j]) };
        let rhs = |x: &[f64], xdot: &[f64], u: &[f64]| {
            let f0 = &u[..n];
            escape(&a.domain, f0)?;
            let f1 = |i: usize, j: usize| u[n + i * n + j];
            let gy = a.gamma(f0)?;
            let gx = a.gamma(x)?;
            let mut out = vec![0.0; n + n * n];
            for i in 0..n {
                out[i] = (0..n).map(|j| f1(i, j) * xdot[j]).sum();
            }
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        let mut t = 0.0;
                        for p in 0..n {
                            for q in 0..n {
                                t += gy.get(&[i, p, q]) * f1(p, j) * f1(q, k);
                            }
                            t -= gx.get(&[p, j, k]) * f1(i, p);
                        }
                        acc += t * xdot[k];
                    }
                    out[n + i * n + j] = acc;
                }
            }
            Ok(out)
        };
        let after = |x: &[f64], u: &[f64]| {
            escape(&a.domain, &u[..n])?;
            let s = unpack(u);
            let det = s.f1.det();
            if det.abs() <= DET_TOLERANCE {
                return Err(GeometryError::SingularArrow { det });
            }
            observe(x, &s)
        };
        let u = self.run(&v, pack(state0), rhs, after)?;
        Ok(unpack(&u))
    }

    /// Affine transport on the pair's `Γ`, with the largest metric residual
    /// `|g(f⁰)(f1·, f1·) − g(x)|` seen along the way.
    pub fn riemann(&self, m: &MetricPair, path: &PathSpec, state0: &AffineState) -> Result<(AffineState, f64)> {
        let residual = |x: &[f64], s: &AffineState| -> Result<f64> {
            let gx = m.metric(x)?;
            let gy = m.metric(s.f0.coords())?;
            Ok(s.f1.transpose().mul(&gy).mul(&s.f1).max_abs_diff(&gx))
        };
        let start = path.vertices().first().cloned().ok_or_else(|| GeometryError::Dimension("empty path".into()))?;
        let mut drift = residual(start.coords(), state0)?;
        if drift > METRIC_TOLERANCE {
            return Err(GeometryError::NotMetricArrow { residual: drift });
        }
        let end = self.affine_observed(&m.gamma, path, state0, |x, s| {
            drift = drift.max(residual(x, s)?);
            Ok(())
        })?;
        Ok((end, drift))
    }
}

pub fn transport_parallelism(w: &StructureObjectW, path: &PathSpec, y0: &Point) -> Result<Point> {
    Stepper::default().parallelism(w, path, y0)
}

pub fn transport_linear(w: &StructureObjectW, path: &PathSpec, xi0: &[f64]) -> Result<Vec<f64>> {
    Stepper::default().linear(w, path, xi0)
}

pub fn transport_affine(a: &AffineObject, path: &PathSpec, state0: &AffineState) -> Result<AffineState> {
    Stepper::default().affine(a, path, state0)
}

/// Returns the terminal state and the metric-constraint drift.
pub fn transport_riemann(m: &MetricPair, path: &PathSpec, state0: &AffineState) -> Result<(AffineState, f64)> {
    Stepper::default().riemann(m, path, state0)
}
