use serde::Serialize;

use super::holonomy::{loop_defect_with, HolonomyReport, LoopKind, LoopStart};
use super::Stepper;
use crate::affine::{linear_curvature_affine, nonlinear_curvature_affine};
use crate::catalog::Geometry;
use crate::chart::sampling::{random_invertible, random_jet, rng, QuasiSampler};
use crate::chart::{DomainBox, Point};
use crate::error::Result;
use crate::parallelism::{linear_curvature_w, nonlinear_curvature_w};
use crate::riemannian::{linear_curvature_riem, metric_arrow_sampler, metric_jet_sampler, riemann_curvature_pair};

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyOptions {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    /// Number of loop base points; every coordinate plane is used at each.
    pub loops: usize,
    /// Side of the largest loop; defaults to 5% of the narrowest box width.
    pub loop_size: Option<f64>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { samples: 100, tol: 1e-7, seed: 0, loops: 6, loop_size: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Flat,
    NotFlat,
}

/// Sampled maxima from each route.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    #[serde(rename = "I_max")]
    pub i_max: f64,
    #[serde(rename = "R_max")]
    pub r_max: f64,
    pub lin_max: f64,
    /// Largest loop defect per enclosed area at the largest loop size.
    pub holonomy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub evidence: Evidence,
    pub tol: f64,
    /// False when one route is within `tol` while another exceeds `10·tol`.
    pub consistent: bool,
    pub loop_size: f64,
    pub loops: Vec<HolonomyReport>,
}

pub fn max_integrability(g: &Geometry, samples: usize, seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in QuasiSampler::new(g.domain(), seed).take(samples) {
        let v = match g {
            Geometry::Parallelism(w) => w.integrability(p.coords())?.norm(),
            Geometry::Affine(a) => a.integrability(p.coords())?.norm(),
            Geometry::Riemannian(m) => {
                m.check(&p)?;
                m.full_i(p.coords())?.norm()
            }
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Largest `‖R‖` over sampled point pairs; the arrows are the unique ones for
/// a parallelism, random invertible ones for an affine structure and sampled
/// metric arrows for a pair.
pub fn max_nonlinear_curvature(g: &Geometry, samples: usize, seed: u64) -> Result<f64> {
    let xs = QuasiSampler::new(g.domain(), seed).take(samples);
    let ys = QuasiSampler::new(g.domain(), seed.wrapping_add(1)).take(samples);
    let mut r = rng(seed, 0xc0de);
    let mut worst: f64 = 0.0;
    for (i, (x, y)) in xs.iter().zip(&ys).enumerate() {
        let v = match g {
            Geometry::Parallelism(w) => nonlinear_curvature_w(w, x, y)?.norm(),
            Geometry::Affine(a) => nonlinear_curvature_affine(a, x, y, &random_invertible(a.n, 0.5, &mut r))?.norm(),
            Geometry::Riemannian(m) => {
                let arrow = metric_arrow_sampler(m, x, y, seed.wrapping_mul(1000).wrapping_add(i as u64))?;
                riemann_curvature_pair(m, x, y, arrow.f1())?.norm()
            }
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Largest linear curvature over samples: `‖𝔯‖` for a parallelism, and the
/// Lie derivative of the integrability object along random admissible jets
/// otherwise.
pub fn max_linear_curvature(g: &Geometry, samples: usize, seed: u64) -> Result<f64> {
    let mut r = rng(seed, 0x11e);
    let mut worst: f64 = 0.0;
    for p in QuasiSampler::new(g.domain(), seed).take(samples) {
        let v = match g {
            Geometry::Parallelism(w) => linear_curvature_w(w, &p)?.norm(),
            Geometry::Affine(a) => linear_curvature_affine(a, &random_jet(a.n, 1, &mut r), &p)?.norm(),
            Geometry::Riemannian(m) => {
                let xi = metric_jet_sampler(m, &p, &mut r)?;
                linear_curvature_riem(m, &xi, &p)?.norm()
            }
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

pub fn default_loop_size(domain: &DomainBox) -> f64 {
    0.05 * domain.min_width()
}

/// Loops at `count` base points in every coordinate plane. Bases are drawn
/// from the central 60% of the box so the loop and its image stay inside.
pub fn sample_loops(g: &Geometry, count: usize, h: f64, seed: u64) -> Result<Vec<HolonomyReport>> {
    let n = g.n();
    let kind = match g {
        Geometry::Parallelism(_) => LoopKind::Linear,
        _ => LoopKind::Affine,
    };
    let region = g.domain().shrink(0.6);
    let mut out = Vec::new();
    for (i, base) in QuasiSampler::in_region(region, seed).take(count).into_iter().enumerate() {
        let start = match kind {
            LoopKind::Linear => None,
            _ => Some(LoopStart::default_for(g, &base, seed.wrapping_add(i as u64))?),
        };
        for j in 0..n {
            for k in (j + 1)..n {
                out.push(loop_defect_with(kind, g, &base, (j, k), h, start.as_ref(), &Stepper::default())?);
            }
        }
    }
    Ok(out)
}

/// Flat iff the closed-form, linearized and holonomy routes all stay within
/// `tol`.
pub fn certify_flat(g: &Geometry, opts: &CertifyOptions) -> Result<Certificate> {
    let h = opts.loop_size.unwrap_or_else(|| default_loop_size(g.domain()));
    let i_max = max_integrability(g, opts.samples, opts.seed)?;
    let r_max = max_nonlinear_curvature(g, opts.samples, opts.seed)?;
    let lin_max = max_linear_curvature(g, opts.samples, opts.seed)?;
    let loops = sample_loops(g, opts.loops, h, opts.seed)?;
    let holonomy = loops.iter().map(|l| l.defect_per_area[0]).fold(0.0, f64::max);
    let routes = [r_max, lin_max, holonomy];
    let all_flat = routes.iter().all(|v| *v <= opts.tol);
    let any_flat = routes.iter().any(|v| *v <= opts.tol);
    let any_curved = routes.iter().any(|v| *v > 10.0 * opts.tol);
    Ok(Certificate {
        verdict: if all_flat { Verdict::Flat } else { Verdict::NotFlat },
        evidence: Evidence { i_max, r_max, lin_max, holonomy },
        tol: opts.tol,
        consistent: !(any_flat && any_curved),
        loop_size: h,
        loops,
    })
}

/// The point pair used by `compute` when only one point is given.
pub fn companion_point(g: &Geometry, x: &Point) -> Point {
    LoopStart::default_for(g, x, 0).map(|s| s.target).unwrap_or_else(|_| x.clone())
}
