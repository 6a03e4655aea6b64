//! Geometry definition files and the built-in catalog.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::affine::AffineObject;
use crate::chart::{DomainBox, ScalarExpr};
use crate::error::{GeometryError, Result};
use crate::parallelism::StructureObjectW;
use crate::riemannian::{levi_civita_gamma, MetricPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Parallelism,
    Affine,
    Riemannian,
}

/// Component expressions keyed by one-based indices, `"i,j"` or `"i,j,k"`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Components {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<BTreeMap<String, String>>,
    /// For a Riemannian pair, leaving this out selects the Levi-Civita `Γ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<BTreeMap<String, String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub name: String,
    pub kind: Kind,
    pub n: usize,
    pub domain: Vec<[f64; 2]>,
    pub components: Components,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_flat: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Parallelism(StructureObjectW),
    Affine(AffineObject),
    Riemannian(MetricPair),
}

impl Geometry {
    pub fn kind(&self) -> Kind {
        match self {
            Geometry::Parallelism(_) => Kind::Parallelism,
            Geometry::Affine(_) => Kind::Affine,
            Geometry::Riemannian(_) => Kind::Riemannian,
        }
    }

    pub fn n(&self) -> usize {
        self.domain().dim()
    }

    pub fn domain(&self) -> &DomainBox {
        match self {
            Geometry::Parallelism(w) => &w.domain,
            Geometry::Affine(a) => &a.domain,
            Geometry::Riemannian(m) => m.domain(),
        }
    }
}

fn parse_key(key: &str, rank: usize, n: usize) -> Result<Vec<usize>> {
    let idx: Vec<usize> = key
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| GeometryError::Schema(format!("component key {key:?} is not a list of indices")))?;
    if idx.len() != rank || idx.iter().any(|&i| i == 0 || i > n) {
        return Err(GeometryError::Schema(format!("component key {key:?} needs {rank} indices in 1..={n}")));
    }
    Ok(idx.into_iter().map(|i| i - 1).collect())
}

fn parse_expr(key: &str, src: &str, n: usize) -> Result<ScalarExpr> {
    ScalarExpr::parse_in(src, n).map_err(|e| match e {
        GeometryError::Parse { line, column, message } => {
            GeometryError::Parse { line, column, message: format!("component {key}: {message}") }
        }
        other => other,
    })
}

/// Reads a component table into a dense row-major array. With `sym`, the
/// last two indices are symmetric and either order may supply the entry.
fn dense(table: &BTreeMap<String, String>, rank: usize, n: usize, sym: bool, what: &str) -> Result<Vec<ScalarExpr>> {
    let size = n.pow(rank as u32);
    let mut out: Vec<Option<ScalarExpr>> = vec![None; size];
    let flat = |idx: &[usize]| idx.iter().fold(0, |acc, &i| acc * n + i);
    for (key, src) in table {
        let idx = parse_key(key, rank, n)?;
        out[flat(&idx)] = Some(parse_expr(&format!("{what}[{key}]"), src, n)?);
    }
    if sym {
        for pos in 0..size {
            if out[pos].is_none() {
                let mut idx: Vec<usize> = (0..rank).rev().map(|d| pos / n.pow(d as u32) % n).collect();
                idx.swap(rank - 2, rank - 1);
                out[pos] = out[flat(&idx)].clone();
            }
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(pos, e)| {
            e.ok_or_else(|| {
                let idx: Vec<String> = (0..rank).rev().map(|d| (pos / n.pow(d as u32) % n + 1).to_string()).collect();
                GeometryError::Schema(format!("{what} component {} is missing", idx.join(",")))
            })
        })
        .collect()
}

fn required<'a>(
    t: &'a Option<BTreeMap<String, String>>,
    what: &str,
    kind: Kind,
) -> Result<&'a BTreeMap<String, String>> {
    t.as_ref().ok_or_else(|| GeometryError::Schema(format!("{kind:?} geometry needs `{what}` components")))
}

fn forbid(t: &Option<BTreeMap<String, String>>, what: &str, kind: Kind) -> Result<()> {
    match t {
        Some(_) => Err(GeometryError::Schema(format!("{kind:?} geometry takes no `{what}` components"))),
        None => Ok(()),
    }
}

impl GeometrySpec {
    pub fn build(&self) -> Result<Geometry> {
        if self.n == 0 || self.n > 8 {
            return Err(GeometryError::Schema(format!("n = {} is outside 1..=8", self.n)));
        }
        if self.domain.len() != self.n {
            return Err(GeometryError::Schema(format!("domain has {} axes, n = {}", self.domain.len(), self.n)));
        }
        let domain = DomainBox::new(self.domain.clone())?;
        let (n, c, kind) = (self.n, &self.components, self.kind);
        match kind {
            Kind::Parallelism => {
                forbid(&c.g, "g", kind)?;
                forbid(&c.gamma, "gamma", kind)?;
                let w = dense(required(&c.w, "w", kind)?, 2, n, false, "w")?;
                Ok(Geometry::Parallelism(StructureObjectW::new(w, domain)?))
            }
            Kind::Affine => {
                forbid(&c.w, "w", kind)?;
                forbid(&c.g, "g", kind)?;
                let gamma = dense(required(&c.gamma, "gamma", kind)?, 3, n, true, "gamma")?;
                Ok(Geometry::Affine(AffineObject::new(gamma, domain)?))
            }
            Kind::Riemannian => {
                forbid(&c.w, "w", kind)?;
                let g = dense(required(&c.g, "g", kind)?, 2, n, true, "g")?;
                let gamma = match &c.gamma {
                    Some(t) => AffineObject::new(dense(t, 3, n, true, "gamma")?, domain)?,
                    None => levi_civita_gamma(&g, domain)?,
                };
                Ok(Geometry::Riemannian(MetricPair::new(g, gamma)?))
            }
        }
    }
}

/// Parse and validate a geometry file.
pub fn load_geometry(text: &str) -> Result<GeometrySpec> {
    let spec: GeometrySpec = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Syntax | serde_json::error::Category::Eof => {
            GeometryError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
        }
        _ => GeometryError::Schema(e.to_string()),
    })?;
    spec.build()?;
    Ok(spec)
}

pub fn save_geometry(spec: &GeometrySpec) -> String {
    serde_json::to_string_pretty(spec).expect("geometry specs always serialize")
}

fn table(entries: &[(&str, &str)]) -> Option<BTreeMap<String, String>> {
    Some(entries.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
}

fn spec(name: &str, kind: Kind, domain: Vec<[f64; 2]>, components: Components, flat: bool) -> GeometrySpec {
    GeometrySpec { name: name.into(), kind, n: domain.len(), domain, components, expect_flat: Some(flat) }
}

fn frame(w: &[(&str, &str)]) -> Components {
    Components { w: table(w), ..Default::default() }
}

fn affine(gamma: &[(&str, &str)]) -> Components {
    Components { gamma: table(gamma), ..Default::default() }
}

fn pair(g: &[(&str, &str)], gamma: &[(&str, &str)]) -> Components {
    Components { g: table(g), gamma: table(gamma), ..Default::default() }
}

const ZERO_GAMMA_2: [(&str, &str); 6] =
    [("1,1,1", "0"), ("1,1,2", "0"), ("1,2,2", "0"), ("2,1,1", "0"), ("2,1,2", "0"), ("2,2,2", "0")];

/// Levi-Civita `Γ` of the stereographic round metric `4δ/(1+|x|²)²`.
const SPHERE_GAMMA: [(&str, &str); 6] = [
    ("1,1,1", "2*x1/(1+x1^2+x2^2)"),
    ("1,1,2", "2*x2/(1+x1^2+x2^2)"),
    ("1,2,2", "-2*x1/(1+x1^2+x2^2)"),
    ("2,1,1", "-2*x2/(1+x1^2+x2^2)"),
    ("2,1,2", "2*x1/(1+x1^2+x2^2)"),
    ("2,2,2", "2*x2/(1+x1^2+x2^2)"),
];

/// Levi-Civita `Γ` of the Poincaré disc metric `4δ/(1−|x|²)²`.
const HYPER_GAMMA: [(&str, &str); 6] = [
    ("1,1,1", "-2*x1/(1-x1^2-x2^2)"),
    ("1,1,2", "-2*x2/(1-x1^2-x2^2)"),
    ("1,2,2", "2*x1/(1-x1^2-x2^2)"),
    ("2,1,1", "2*x2/(1-x1^2-x2^2)"),
    ("2,1,2", "-2*x1/(1-x1^2-x2^2)"),
    ("2,2,2", "-2*x2/(1-x1^2-x2^2)"),
];

const DELTA_2: [(&str, &str); 3] = [("1,1", "1"), ("1,2", "0"), ("2,2", "1")];

/// The twelve built-in geometries.
pub fn builtin_catalog() -> Vec<GeometrySpec> {
    let sq = |h: f64| vec![[-h, h]; 2];
    vec![
        spec(
            "trans2",
            Kind::Parallelism,
            sq(1.0),
            frame(&[("1,1", "1"), ("1,2", "0"), ("2,1", "0"), ("2,2", "1")]),
            true,
        ),
        spec(
            "axb",
            Kind::Parallelism,
            vec![[0.5, 3.0], [-1.0, 1.0]],
            frame(&[("1,1", "x1"), ("1,2", "0"), ("2,1", "0"), ("2,2", "x1")]),
            true,
        ),
        spec(
            "heis3",
            Kind::Parallelism,
            vec![[-1.0, 1.0]; 3],
            frame(&[
                ("1,1", "1"),
                ("1,2", "0"),
                ("1,3", "0"),
                ("2,1", "0"),
                ("2,2", "1"),
                ("2,3", "0"),
                ("3,1", "0"),
                ("3,2", "x1"),
                ("3,3", "1"),
            ]),
            true,
        ),
        spec(
            "pert2",
            Kind::Parallelism,
            sq(1.5),
            frame(&[("1,1", "1"), ("1,2", "0"), ("2,1", "0"), ("2,2", "1+0.3*sin(x1)")]),
            false,
        ),
        spec("affine-zero", Kind::Affine, sq(1.0), affine(&ZERO_GAMMA_2), true),
        spec(
            "affine-pullback-flat",
            Kind::Affine,
            sq(1.0),
            affine(&[("1,1,1", "0"), ("1,1,2", "0"), ("1,2,2", "-2"), ("2,1,1", "0"), ("2,1,2", "0"), ("2,2,2", "0")]),
            true,
        ),
        spec("affine-sphere", Kind::Affine, sq(1.0), affine(&SPHERE_GAMMA), false),
        spec("euclid2", Kind::Riemannian, sq(1.0), pair(&DELTA_2, &ZERO_GAMMA_2), true),
        spec(
            "sphere2",
            Kind::Riemannian,
            sq(2.0),
            pair(&[("1,1", "4/(1+x1^2+x2^2)^2"), ("1,2", "0"), ("2,2", "4/(1+x1^2+x2^2)^2")], &SPHERE_GAMMA),
            true,
        ),
        spec(
            "hyper2",
            Kind::Riemannian,
            sq(0.56),
            pair(&[("1,1", "4/(1-x1^2-x2^2)^2"), ("1,2", "0"), ("2,2", "4/(1-x1^2-x2^2)^2")], &HYPER_GAMMA),
            true,
        ),
        spec("mismatch2", Kind::Riemannian, sq(2.0), pair(&DELTA_2, &SPHERE_GAMMA), false),
        spec(
            "bump2",
            Kind::Riemannian,
            sq(1.0),
            pair(
                &[("1,1", "1"), ("1,2", "0"), ("2,2", "1+x1^2")],
                &[
                    ("1,1,1", "0"),
                    ("1,1,2", "0"),
                    ("1,2,2", "x1"),
                    ("2,1,1", "0"),
                    ("2,1,2", "-x1/(1+x1^2)"),
                    ("2,2,2", "0"),
                ],
            ),
            false,
        ),
    ]
}

/// One expression of the differentiation corpus with the box it is sampled on.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusEntry {
    pub source: String,
    pub domain: DomainBox,
}

/// Every distinct component expression of the catalog plus a few extra
/// expressions exercising each function and negative powers.
pub fn expression_corpus() -> Vec<CorpusEntry> {
    let mut out: Vec<CorpusEntry> = Vec::new();
    let mut push = |source: &str, domain: DomainBox| {
        if !out.iter().any(|e| e.source == source && e.domain.dim() == domain.dim()) {
            out.push(CorpusEntry { source: source.to_string(), domain });
        }
    };
    for s in builtin_catalog() {
        let domain = DomainBox::new(s.domain.clone()).expect("catalog boxes are valid");
        let c = &s.components;
        for t in [&c.w, &c.g, &c.gamma].into_iter().flatten() {
            for src in t.values() {
                push(src, domain.clone());
            }
        }
    }
    let sq = DomainBox::cube(2, -1.0, 1.0);
    for src in [
        "exp(x1)*cos(x2)",
        "log(1+x1^2+x2^2)",
        "sqrt(2+x1-x2)",
        "tanh(x1*x2)-x1^3/(2+x2)",
        "-x1*exp(-x2^2)",
        "sin(x1)^2",
        "1/(1+x1^2)^2",
        "(x1-2*x2)^4/3",
    ] {
        push(src, sq.clone());
    }
    push("x1^-2+sin(x2)^2", DomainBox::new(vec![[0.5, 2.0], [-1.0, 1.0]]).unwrap());
    push("(x1+x2+x3)^3-x1*x2*x3", DomainBox::cube(3, -1.0, 1.0));
    push("cos(x1*x2)*exp(x3)/(3+x1)", DomainBox::cube(3, -1.0, 1.0));
    out
}

pub fn catalog_entry(name: &str) -> Option<GeometrySpec> {
    builtin_catalog().into_iter().find(|s| s.name == name)
}

/// A catalog name, or else the path of a geometry file.
pub fn resolve_geometry(name_or_path: &str) -> Result<GeometrySpec> {
    if let Some(s) = catalog_entry(name_or_path) {
        return Ok(s);
    }
    let text = std::fs::read_to_string(name_or_path).map_err(|e| {
        GeometryError::Schema(format!("{name_or_path:?} is neither a catalog entry nor a readable file: {e}"))
    })?;
    load_geometry(&text)
}
