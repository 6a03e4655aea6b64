//! The JSON curvature report.

use serde::Serialize;

use crate::catalog::{Geometry, GeometrySpec, Kind};
use crate::chart::sampling::QuasiSampler;
use crate::error::{GeometryError, Result};
use crate::riemannian::{classify, Classification, ClassifyReport};
use crate::transport::{certify_flat, CertifyOptions, Evidence, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub identities: f64,
    pub flatness: f64,
    pub holonomy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { identities: 1e-10, flatness: 1e-7, holonomy: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitSummary {
    pub class: Classification,
    /// `max ‖Γ − Γ̃‖` over the samples.
    pub one_flat_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
}

impl From<&ClassifyReport> for FitSummary {
    fn from(c: &ClassifyReport) -> Self {
        FitSummary {
            class: c.class,
            one_flat_residual: c.one_flat.max_residual,
            c_min: c.fit.as_ref().map(|f| f.c_min),
            c_max: c.fit.as_ref().map(|f| f.c_max),
            spread: c.fit.as_ref().map(|f| f.spread),
            max_residual: c.fit.as_ref().map(|f| f.max_residual),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, tol: f64) -> Check {
        Check { name: name.into(), pass: value <= tol, value, tol }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub geometry: String,
    pub kind: Kind,
    pub seed: u64,
    pub samples: usize,
    pub loops: usize,
    pub tolerances: Tolerances,
    pub evidence: Evidence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
}

impl CurvatureReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

pub fn curvature_report(spec: &GeometrySpec, seed: u64, samples: usize, tol: &Tolerances) -> Result<CurvatureReport> {
    let g = spec.build()?;
    let opts = CertifyOptions { samples, tol: tol.flatness, seed, ..CertifyOptions::default() };
    let cert = certify_flat(&g, &opts)?;
    let ev = &cert.evidence;
    let mut checks = vec![
        Check::at_most("integrability_antisymmetry", antisymmetry_residual(&g, samples, seed)?, tol.identities),
        Check::at_most("nonlinear_curvature", ev.r_max, tol.flatness),
        Check::at_most("linear_curvature", ev.lin_max, tol.flatness),
        Check::at_most("loop_defect", ev.holonomy, tol.flatness),
    ];
    let mismatch = cert.loops.iter().filter_map(|l| l.mismatch).fold(0.0, f64::max);
    if matches!(g, Geometry::Parallelism(_)) {
        checks.push(Check::at_most("holonomy_oracle", mismatch, tol.holonomy));
    }
    let fit = match &g {
        Geometry::Riemannian(m) => {
            let i1 = QuasiSampler::new(m.domain(), seed)
                .take(samples)
                .iter()
                .map(|p| m.i1(p.coords()).map(|t| t.norm()))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            checks.push(Check::at_most("metric_compatibility", i1, tol.identities));
            Some(FitSummary::from(&classify(m, samples, tol.flatness, seed)?))
        }
        _ => None,
    };
    let report = CurvatureReport {
        geometry: spec.name.clone(),
        kind: spec.kind,
        seed,
        samples,
        loops: cert.loops.len(),
        tolerances: *tol,
        evidence: cert.evidence.clone(),
        fit,
        verdict: cert.verdict,
        checks,
    };
    if !report_is_finite(&report) {
        return Err(GeometryError::Domain(format!("report for {} has a non-finite number", spec.name)));
    }
    Ok(report)
}

fn antisymmetry_residual(g: &Geometry, samples: usize, seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in QuasiSampler::new(g.domain(), seed).take(samples) {
        let t = match g {
            Geometry::Parallelism(w) => w.integrability(p.coords())?,
            Geometry::Affine(a) => a.integrability(p.coords())?,
            Geometry::Riemannian(m) => m.i2(p.coords())?,
        };
        let n = t.dim();
        let rank = t.rank();
        for (pos, v) in t.components().iter().enumerate() {
            let mut idx: Vec<usize> = (0..rank).rev().map(|d| pos / n.pow(d as u32) % n).collect();
            idx.swap(1, 2);
            worst = worst.max((v + t.get(&idx)).abs());
        }
    }
    Ok(worst)
}

fn report_is_finite(r: &CurvatureReport) -> bool {
    let e = &r.evidence;
    let fit = r
        .fit
        .iter()
        .flat_map(|f| [Some(f.one_flat_residual), f.c_min, f.c_max, f.spread, f.max_residual].into_iter().flatten());
    [e.i_max, e.r_max, e.lin_max, e.holonomy]
        .into_iter()
        .chain(fit)
        .chain(r.checks.iter().map(|c| c.value))
        .all(f64::is_finite)
}
