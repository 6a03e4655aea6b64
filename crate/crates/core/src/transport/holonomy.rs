use serde::{Deserialize, Serialize};

use super::{AffineState, PathSpec, Stepper};
use crate::catalog::Geometry;
use crate::chart::sampling::{random_invertible, random_orthogonal, rng};
use crate::chart::{Matrix, Point};
use crate::error::{GeometryError, Result};
use crate::riemannian::metric_arrow_with;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopKind {
    Parallelism,
    Linear,
    Affine,
}

/// Initial state for the nonlinear loop kinds: the image point `y0` (or
/// `f⁰`) and, for the affine kind, `f1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopStart {
    pub target: Point,
    pub f1: Matrix,
}

impl LoopStart {
    /// `target` is `base` moved by a tenth of the narrowest box width; `f1` is
    /// a seeded perturbation of the identity, or a metric arrow for a
    /// Riemannian pair.
    pub fn default_for(geometry: &Geometry, base: &Point, seed: u64) -> Result<LoopStart> {
        let domain = geometry.domain();
        let n = domain.dim();
        let step = 0.1 * domain.min_width();
        let dir: Vec<f64> = (0..n).map(|i| [0.6, -0.8, 0.5][i % 3]).collect();
        let target = [1.0, -1.0]
            .iter()
            .map(|s| base.offset(&dir, s * step))
            .find(|p| domain.contains(p.coords()))
            .ok_or_else(|| GeometryError::DomainEscape { point: base.0.clone() })?;
        let mut r = rng(seed, 0x100b);
        let f1 = match geometry {
            Geometry::Riemannian(m) => metric_arrow_with(m, base, &target, &random_orthogonal(n, &mut r))?.f1().clone(),
            _ => random_invertible(n, 0.2, &mut r),
        };
        Ok(LoopStart { target, f1 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolonomyReport {
    pub kind: LoopKind,
    pub base: Vec<f64>,
    /// One-based coordinate plane.
    pub plane: [usize; 2],
    pub sizes: [f64; 3],
    pub defects: [f64; 3],
    pub defect_per_area: [f64; 3],
    /// Norm of the Richardson-extrapolated defect per area.
    pub extrapolated: f64,
    /// `defect(h) / defect(h/2)`; near 4 for a curved geometry.
    pub order_ratio: f64,
    /// `‖𝔯_jk‖` at the base (linear kind only).
    pub curvature_slice: Option<f64>,
    /// `‖extrapolated − 𝔯_jk‖ / ‖𝔯_jk‖` (linear kind, nonzero slice only).
    pub mismatch: Option<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Loop defects around squares of side `h`, `h/2`, `h/4` with corner `base`
/// in the zero-based plane `(j, k)`.
pub fn loop_defect(
    kind: LoopKind,
    geometry: &Geometry,
    base: &Point,
    plane: (usize, usize),
    h: f64,
) -> Result<HolonomyReport> {
    let start = match kind {
        LoopKind::Linear => None,
        _ => Some(LoopStart::default_for(geometry, base, 0)?),
    };
    loop_defect_with(kind, geometry, base, plane, h, start.as_ref(), &Stepper::default())
}

pub fn loop_defect_with(
    kind: LoopKind,
    geometry: &Geometry,
    base: &Point,
    plane: (usize, usize),
    h: f64,
    start: Option<&LoopStart>,
    stepper: &Stepper,
) -> Result<HolonomyReport> {
    let n = geometry.n();
    if plane.0 == plane.1 || plane.0 >= n || plane.1 >= n {
        return Err(GeometryError::Dimension(format!("plane {plane:?} is not a coordinate plane of R^{n}")));
    }
    if !(h > 0.0) {
        return Err(GeometryError::Domain(format!("loop size must be positive, got {h}")));
    }
    let need_start = || start.ok_or_else(|| GeometryError::Schema("loop kind needs an initial state".into()));
    let sizes = [h, h / 2.0, h / 4.0];
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(3);
    for &s in &sizes {
        let path = PathSpec::square(base.clone(), s, plane);
        let d = match (kind, geometry) {
            (LoopKind::Parallelism, Geometry::Parallelism(w)) => {
                let y0 = &need_start()?.target;
                let y = stepper.parallelism(w, &path, y0)?;
                y.0.iter().zip(&y0.0).map(|(a, b)| a - b).collect()
            }
            (LoopKind::Linear, Geometry::Parallelism(w)) => {
                let m = stepper.linear_monodromy(w, &path)?;
                m.sub(&Matrix::identity(n)).as_slice().to_vec()
            }
            (LoopKind::Affine, Geometry::Affine(_) | Geometry::Riemannian(_)) => {
                let st = need_start()?;
                let s0 = AffineState { f0: st.target.clone(), f1: st.f1.clone() };
                let end = match geometry {
                    Geometry::Affine(a) => stepper.affine(a, &path, &s0)?,
                    Geometry::Riemannian(m) => stepper.riemann(m, &path, &s0)?.0,
                    Geometry::Parallelism(_) => unreachable!(),
                };
                let df0 = end.f0.0.iter().zip(&s0.f0.0).map(|(a, b)| a - b);
                let df1 = end.f1.as_slice().iter().zip(s0.f1.as_slice()).map(|(a, b)| a - b);
                df0.chain(df1).collect()
            }
            _ => {
                return Err(GeometryError::Schema(format!(
                    "{kind:?} loops do not apply to a {:?} geometry",
                    geometry.kind()
                )))
            }
        };
        diffs.push(d);
    }
    let per_area: Vec<Vec<f64>> =
        diffs.iter().zip(&sizes).map(|(d, s)| d.iter().map(|v| v / (s * s)).collect()).collect();
    // D(h) = K + a·h + b·h² eliminated over h, h/2, h/4
    let extrapolated: Vec<f64> =
        (0..per_area[0].len()).map(|i| (8.0 * per_area[2][i] - 6.0 * per_area[1][i] + per_area[0][i]) / 3.0).collect();
    let defects = [norm(&diffs[0]), norm(&diffs[1]), norm(&diffs[2])];
    let (curvature_slice, mismatch) = match (kind, geometry) {
        (LoopKind::Linear, Geometry::Parallelism(w)) => {
            w.domain.check(base.coords())?;
            let r = w.linear_curvature(base.coords())?;
            let slice: Vec<f64> = (0..n * n).map(|p| r.get(&[p / n, plane.0, plane.1, p % n])).collect();
            let s = norm(&slice);
            let diff: Vec<f64> = extrapolated.iter().zip(&slice).map(|(a, b)| a - b).collect();
            (Some(s), (s > 1e-12).then(|| norm(&diff) / s))
        }
        _ => (None, None),
    };
    Ok(HolonomyReport {
        kind,
        base: base.0.clone(),
        plane: [plane.0 + 1, plane.1 + 1],
        sizes,
        defects,
        defect_per_area: [norm(&per_area[0]), norm(&per_area[1]), norm(&per_area[2])],
        extrapolated: norm(&extrapolated),
        order_ratio: if defects[1] > 0.0 { defects[0] / defects[1] } else { 0.0 },
        curvature_slice,
        mismatch,
    })
}
