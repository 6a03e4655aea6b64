use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

/// Points closer than this to the boundary of the chart box are rejected.
pub const BOUNDARY_MARGIN: f64 = 1e-9;

/// Coordinates of a point on the chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// `self + t·v`
    pub fn offset(&self, v: &[f64], t: f64) -> Point {
        Point(self.0.iter().zip(v).map(|(a, b)| a + t * b).collect())
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

/// An open axis-aligned box `(lo_i, hi_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub bounds: Vec<[f64; 2]>,
}

impl DomainBox {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(GeometryError::Schema("domain must have at least one axis".into()));
        }
        for (i, [lo, hi]) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeometryError::Schema(format!("domain axis {} is degenerate: [{lo}, {hi}]", i + 1)));
            }
        }
        Ok(DomainBox { bounds })
    }

    /// `[lo, hi]` on every one of `n` axes.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        DomainBox { bounds: vec![[lo, hi]; n] }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.bounds).all(|(v, [lo, hi])| *v > lo + BOUNDARY_MARGIN && *v < hi - BOUNDARY_MARGIN)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(GeometryError::Dimension(format!(
                "point has {} coordinates, chart has {}",
                x.len(),
                self.dim()
            )));
        }
        if !self.contains(x) {
            return Err(GeometryError::Domain(format!("point {x:?} is outside the chart box {:?}", self.bounds)));
        }
        Ok(())
    }

    /// Check that a central-difference stencil of half-width `step` around
    /// `x` stays inside the box.
    pub fn check_stencil(&self, x: &[f64], step: f64) -> Result<()> {
        self.check(x)?;
        for (i, (v, [lo, hi])) in x.iter().zip(&self.bounds).enumerate() {
            if v - step <= lo + BOUNDARY_MARGIN || v + step >= hi - BOUNDARY_MARGIN {
                return Err(GeometryError::Domain(format!(
                    "finite-difference stencil leaves the chart along axis {}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// The concentric box scaled by `fraction` (0 < fraction ≤ 1).
    pub fn shrink(&self, fraction: f64) -> DomainBox {
        DomainBox {
            bounds: self
                .bounds
                .iter()
                .map(|[lo, hi]| {
                    let mid = 0.5 * (lo + hi);
                    let half = 0.5 * (hi - lo) * fraction;
                    [mid - half, mid + half]
                })
                .collect(),
        }
    }

    pub fn min_width(&self) -> f64 {
        self.bounds.iter().map(|[lo, hi]| hi - lo).fold(f64::INFINITY, f64::min)
    }
}
