//! The `phg` command line: argument parsing and subcommand dispatch.
//!
//! `run_command` does all the work and returns the exit code with the text
//! meant for stdout and stderr, so tests can drive it without a process.

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phg_core::affine::{integrability_affine, linear_curvature_affine, nonlinear_curvature_affine};
use phg_core::catalog::{builtin_catalog, resolve_geometry, Geometry, GeometrySpec};
use phg_core::chart::sampling::{random_invertible, random_jet, rng};
use phg_core::chart::{JetValued2Form, Point, TensorBlock};
use phg_core::parallelism::{gamma_of_w, integrability_w, linear_curvature_w, nonlinear_curvature_w};
use phg_core::report::{curvature_report, FitSummary, Tolerances};
use phg_core::riemannian::{
    classify, linear_curvature_riem, metric_arrow_sampler, metric_jet_sampler, riemann_curvature_pair,
};
use phg_core::transport::{
    certify_flat, companion_point, default_loop_size, loop_defect_with, max_linear_curvature, max_nonlinear_curvature,
    sample_loops, CertifyOptions, LoopKind, LoopStart, Stepper, Verdict,
};
use phg_core::GeometryError;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_NOT_FLAT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "phg", version, about = "Curvature, flatness and holonomy of prehomogeneous geometries")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Catalog name or path of a geometry file
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Print JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug, Clone)]
struct Batch {
    /// Run over every catalog entry instead of --geometry
    #[arg(long)]
    all_catalog: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate one object at a point (or point pair)
    Compute {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        object: Object,
        /// Comma-separated coordinates
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Second point for R; defaults to a nearby point
        #[arg(long, allow_hyphen_values = true)]
        point2: Option<String>,
    },
    /// Run the flatness certification pipeline
    Certify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
        #[arg(long)]
        loop_size: Option<f64>,
        #[arg(long, default_value_t = 6)]
        loops: usize,
        /// Exit with code 3 unless the verdict is Flat (with --all-catalog:
        /// unless every verdict matches the entry's flatness marker)
        #[arg(long)]
        expect_flat: bool,
    },
    /// Loop defects around small squares
    Holonomy {
        #[command(flatten)]
        common: Common,
        /// Loop corner; sampled when omitted
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(long)]
        loop_size: Option<f64>,
        #[arg(long, default_value_t = 6)]
        loops: usize,
    },
    /// Closed-form, linearized and holonomy evidence side by side
    Lie3 {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
        #[arg(long)]
        loop_size: Option<f64>,
        #[arg(long, default_value_t = 6)]
        loops: usize,
    },
    /// Classify a Riemannian pair
    Classify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
    },
    /// Full curvature report as JSON
    Report {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        batch: Batch,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Object {
    #[value(name = "gamma")]
    Gamma,
    #[value(name = "I")]
    I,
    #[value(name = "I1")]
    I1,
    #[value(name = "I2")]
    I2,
    #[value(name = "christoffel")]
    Christoffel,
    #[value(name = "R")]
    R,
    #[value(name = "r")]
    LinearR,
}

/// Exit code and captured output of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn fail(code: i32, msg: impl Into<String>) -> Self {
        Outcome { code, stdout: String::new(), stderr: format!("error: {}\n", msg.into()) }
    }
}

/// Failure before any output is produced.
struct Fail(i32, String);

impl From<GeometryError> for Fail {
    fn from(e: GeometryError) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INVALID };
        Fail(code, e.to_string())
    }
}

type Run<T> = std::result::Result<T, Fail>;

fn invalid<T>(msg: impl Into<String>) -> Run<T> {
    Err(Fail(EXIT_INVALID, msg.into()))
}

pub fn run_command<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.exit_code() {
                0 => Outcome::ok(text),
                _ => Outcome { code: EXIT_INVALID, stdout: String::new(), stderr: text },
            };
        }
    };
    match dispatch(cli.cmd) {
        Ok(o) => o,
        Err(Fail(code, msg)) => Outcome::fail(code, msg),
    }
}

fn dispatch(cmd: Cmd) -> Run<Outcome> {
    match cmd {
        Cmd::Compute { common, object, point, point2 } => compute(&common, object, &point, point2.as_deref()),
        Cmd::Certify { common, batch, loop_size, loops, expect_flat } => {
            certify(&common, &batch, loop_size, loops, expect_flat)
        }
        Cmd::Holonomy { common, point, loop_size, loops } => holonomy(&common, point.as_deref(), loop_size, loops),
        Cmd::Lie3 { common, batch, loop_size, loops } => lie3(&common, &batch, loop_size, loops),
        Cmd::Classify { common, batch } => classify_cmd(&common, &batch),
        Cmd::Report { common, batch } => report(&common, &batch),
    }
}

fn specs(common: &Common, batch: Option<&Batch>) -> Run<Vec<GeometrySpec>> {
    if batch.is_some_and(|b| b.all_catalog) {
        if common.geometry.is_some() {
            return invalid("--geometry and --all-catalog are mutually exclusive");
        }
        return Ok(builtin_catalog());
    }
    match &common.geometry {
        Some(g) => Ok(vec![resolve_geometry(g)?]),
        None => invalid("--geometry is required"),
    }
}

fn check_common(common: &Common) -> Run<()> {
    if common.samples == 0 {
        return invalid("--samples must be positive");
    }
    if !(common.tol > 0.0 && common.tol.is_finite()) {
        return invalid("--tol must be a positive number");
    }
    Ok(())
}

fn parse_point(text: &str, g: &Geometry) -> Run<Point> {
    let coords = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Fail(EXIT_INVALID, format!("point {text:?} is not a comma-separated list of numbers")))?;
    if coords.len() != g.n() {
        return invalid(format!("point {text:?} has {} coordinates, geometry has {}", coords.len(), g.n()));
    }
    if !g.domain().contains(&coords) {
        return invalid(format!("point {text:?} lies outside the chart box"));
    }
    Ok(Point(coords))
}

fn nested(values: &[f64], n: usize, rank: usize) -> Value {
    if rank == 0 {
        return json!(values[0]);
    }
    let stride = n.pow(rank as u32 - 1);
    Value::Array(values.chunks(stride).map(|c| nested(c, n, rank - 1)).collect())
}

fn block_json(t: &TensorBlock) -> Value {
    json!({
        "slots": t.slots(),
        "components": nested(t.components(), t.dim(), t.rank()),
    })
}

fn form_json(f: &JetValued2Form) -> Value {
    json!({ "rho": block_json(&f.rho), "sigma": block_json(&f.sigma) })
}

fn block_text(label: &str, t: &TensorBlock, out: &mut String) {
    let (n, rank) = (t.dim(), t.rank());
    let mut any = false;
    for (pos, v) in t.components().iter().enumerate() {
        if *v != 0.0 {
            let idx: Vec<String> = (0..rank).rev().map(|d| (pos / n.pow(d as u32) % n + 1).to_string()).collect();
            out.push_str(&format!("{label}[{}] = {v:.12e}\n", idx.join(",")));
            any = true;
        }
    }
    if !any {
        out.push_str(&format!("{label}: all {} components are zero\n", t.components().len()));
    }
}

fn render(common: &Common, value: &Value, text: String) -> String {
    if common.json {
        serde_json::to_string_pretty(value).expect("values serialize") + "\n"
    } else {
        text
    }
}

fn compute(common: &Common, object: Object, point: &str, point2: Option<&str>) -> Run<Outcome> {
    let spec = specs(common, None)?.remove(0);
    let g = spec.build()?;
    let x = parse_point(point, &g)?;
    let needs_metric = |what: &str| Fail(EXIT_INVALID, format!("{what} is defined for Riemannian geometries only"));
    let mut extra = serde_json::Map::new();
    let mut text = String::new();
    // each arm yields (json value, blocks for the text form)
    let (value, blocks): (Value, Vec<(&str, TensorBlock)>) = match (object, &g) {
        (Object::Gamma, Geometry::Parallelism(w)) => one(gamma_of_w(w, &x)?),
        (Object::Gamma, Geometry::Affine(a)) => one(a.gamma(x.coords())?),
        (Object::Gamma, Geometry::Riemannian(m)) => {
            m.check(&x)?;
            one(m.gamma.gamma(x.coords())?)
        }
        (Object::Christoffel, Geometry::Riemannian(m)) => {
            m.check(&x)?;
            one(m.christoffel(x.coords())?)
        }
        (Object::I, Geometry::Parallelism(w)) => one(integrability_w(w, &x)?),
        (Object::I, Geometry::Affine(a)) => one(integrability_affine(a, &x)?),
        (Object::I, Geometry::Riemannian(m)) => {
            m.check(&x)?;
            pair(m.full_i(x.coords())?)
        }
        (Object::I1, Geometry::Riemannian(m)) => {
            m.check(&x)?;
            one(m.i1(x.coords())?)
        }
        (Object::I2, Geometry::Riemannian(m)) => {
            m.check(&x)?;
            one(m.i2(x.coords())?)
        }
        (Object::R, _) => {
            let y = match point2 {
                Some(p) => parse_point(p, &g)?,
                None => companion_point(&g, &x),
            };
            extra.insert("point2".into(), json!(y.0));
            match &g {
                Geometry::Parallelism(w) => one(nonlinear_curvature_w(w, &x, &y)?),
                Geometry::Affine(a) => {
                    let f1 = random_invertible(a.n, 0.5, &mut rng(common.seed, 0xc0de));
                    extra.insert("f1".into(), json!(f1));
                    one(nonlinear_curvature_affine(a, &x, &y, &f1)?)
                }
                Geometry::Riemannian(m) => {
                    let arrow = metric_arrow_sampler(m, &x, &y, common.seed)?;
                    extra.insert("f1".into(), json!(arrow.f1()));
                    pair(riemann_curvature_pair(m, &x, &y, arrow.f1())?)
                }
            }
        }
        (Object::LinearR, Geometry::Parallelism(w)) => one(linear_curvature_w(w, &x)?),
        (Object::LinearR, Geometry::Affine(a)) => {
            let jet = random_jet(a.n, 1, &mut rng(common.seed, 0x11e));
            extra.insert("jet".into(), json!({ "xi0": jet.xi0, "xi1": jet.xi1()? }));
            one(linear_curvature_affine(a, &jet, &x)?)
        }
        (Object::LinearR, Geometry::Riemannian(m)) => {
            let jet = metric_jet_sampler(m, &x, &mut rng(common.seed, 0x11e))?;
            extra.insert("jet".into(), json!({ "xi0": jet.xi0, "xi1": jet.xi1()? }));
            pair(linear_curvature_riem(m, &jet, &x)?)
        }
        (Object::I1 | Object::I2 | Object::Christoffel, _) => return Err(needs_metric(&format!("{object:?}"))),
    };
    let mut doc = serde_json::Map::new();
    doc.insert("geometry".into(), json!(spec.name));
    let name = object.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    doc.insert("object".into(), json!(name));
    doc.insert("point".into(), json!(x.0));
    doc.extend(extra);
    doc.insert("value".into(), value);
    for (label, b) in &blocks {
        block_text(if label.is_empty() { &name } else { label }, b, &mut text);
    }
    Ok(Outcome::ok(render(common, &Value::Object(doc), text)))
}

fn one(t: TensorBlock) -> (Value, Vec<(&'static str, TensorBlock)>) {
    (block_json(&t), vec![("", t)])
}

fn pair(f: JetValued2Form) -> (Value, Vec<(&'static str, TensorBlock)>) {
    (form_json(&f), vec![("rho", f.rho), ("sigma", f.sigma)])
}

fn certify(common: &Common, batch: &Batch, loop_size: Option<f64>, loops: usize, expect_flat: bool) -> Run<Outcome> {
    check_common(common)?;
    let specs = specs(common, Some(batch))?;
    let opts = CertifyOptions { samples: common.samples, tol: common.tol, seed: common.seed, loops, loop_size };
    let mut code = EXIT_OK;
    let (mut docs, mut text) = (Vec::new(), String::new());
    for spec in &specs {
        let cert = certify_flat(&spec.build()?, &opts)?;
        let want_flat = if batch.all_catalog { spec.expect_flat.unwrap_or(true) } else { true };
        if !cert.consistent {
            code = code.max(EXIT_NUMERICAL);
        } else if expect_flat && (cert.verdict == Verdict::Flat) != want_flat {
            code = code.max(EXIT_NOT_FLAT);
        }
        let e = &cert.evidence;
        text.push_str(&format!(
            "{}: {:?} (I_max {:.3e}, R_max {:.3e}, lin_max {:.3e}, holonomy {:.3e}; tol {:.1e}{})\n",
            spec.name,
            cert.verdict,
            e.i_max,
            e.r_max,
            e.lin_max,
            e.holonomy,
            cert.tol,
            if cert.consistent { "" } else { "; routes disagree" }
        ));
        let mut v = serde_json::to_value(&cert).expect("certificates serialize");
        v.as_object_mut().unwrap().insert("geometry".into(), json!(spec.name));
        docs.push(v);
    }
    let value = if batch.all_catalog { Value::Array(docs) } else { docs.remove(0) };
    Ok(Outcome { code, stdout: render(common, &value, text), stderr: String::new() })
}

fn loop_kind(g: &Geometry) -> LoopKind {
    match g {
        Geometry::Parallelism(_) => LoopKind::Linear,
        _ => LoopKind::Affine,
    }
}

fn holonomy(common: &Common, point: Option<&str>, loop_size: Option<f64>, loops: usize) -> Run<Outcome> {
    let spec = specs(common, None)?.remove(0);
    let g = spec.build()?;
    let h = loop_size.unwrap_or_else(|| default_loop_size(g.domain()));
    let reports = match point {
        Some(p) => {
            let base = parse_point(p, &g)?;
            let kind = loop_kind(&g);
            let start = match kind {
                LoopKind::Linear => None,
                _ => Some(LoopStart::default_for(&g, &base, common.seed)?),
            };
            let mut out = Vec::new();
            for j in 0..g.n() {
                for k in (j + 1)..g.n() {
                    out.push(loop_defect_with(kind, &g, &base, (j, k), h, start.as_ref(), &Stepper::default())?);
                }
            }
            out
        }
        None => sample_loops(&g, loops, h, common.seed)?,
    };
    let mut text = String::new();
    for r in &reports {
        text.push_str(&format!(
            "{} plane ({},{}) base {:?}: defect/area {:.3e} {:.3e} {:.3e}, extrapolated {:.3e}, ratio {:.3}{}\n",
            spec.name,
            r.plane[0],
            r.plane[1],
            r.base,
            r.defect_per_area[0],
            r.defect_per_area[1],
            r.defect_per_area[2],
            r.extrapolated,
            r.order_ratio,
            r.mismatch.map(|m| format!(", mismatch {:.2}%", 100.0 * m)).unwrap_or_default()
        ));
    }
    let value = json!({ "geometry": spec.name, "loop_size": h, "loops": reports });
    Ok(Outcome::ok(render(common, &value, text)))
}

fn lie3(common: &Common, batch: &Batch, loop_size: Option<f64>, loops: usize) -> Run<Outcome> {
    check_common(common)?;
    let specs = specs(common, Some(batch))?;
    let mut code = EXIT_OK;
    let (mut docs, mut text) = (Vec::new(), String::new());
    for spec in &specs {
        let g = spec.build()?;
        let h = loop_size.unwrap_or_else(|| default_loop_size(g.domain()));
        let r_max = max_nonlinear_curvature(&g, common.samples, common.seed)?;
        let lin_max = max_linear_curvature(&g, common.samples, common.seed)?;
        let hol = sample_loops(&g, loops, h, common.seed)?.iter().map(|l| l.defect_per_area[0]).fold(0.0, f64::max);
        let flat = [r_max <= common.tol, lin_max <= common.tol, hol <= common.tol];
        let agree = flat.iter().all(|f| *f == flat[0]);
        if !agree {
            code = EXIT_NUMERICAL;
        }
        text.push_str(&format!(
            "{}: R_max {:.3e}, lin_max {:.3e}, holonomy {:.3e} -> {} ({})\n",
            spec.name,
            r_max,
            lin_max,
            hol,
            if flat[0] { "flat" } else { "not flat" },
            if agree { "routes agree" } else { "routes disagree" }
        ));
        docs.push(json!({
            "geometry": spec.name,
            "tol": common.tol,
            "evidence": { "R_max": r_max, "lin_max": lin_max, "holonomy": hol },
            "flat": { "R": flat[0], "lin": flat[1], "holonomy": flat[2] },
            "agree": agree,
        }));
    }
    let value = if batch.all_catalog { Value::Array(docs) } else { docs.remove(0) };
    Ok(Outcome { code, stdout: render(common, &value, text), stderr: String::new() })
}

fn classify_cmd(common: &Common, batch: &Batch) -> Run<Outcome> {
    check_common(common)?;
    let mut specs = specs(common, Some(batch))?;
    if batch.all_catalog {
        specs.retain(|s| s.kind == phg_core::catalog::Kind::Riemannian);
    }
    let (mut docs, mut text) = (Vec::new(), String::new());
    for spec in &specs {
        let m = match spec.build()? {
            Geometry::Riemannian(m) => m,
            _ => return invalid(format!("{} is not a Riemannian geometry", spec.name)),
        };
        let summary = FitSummary::from(&classify(&m, common.samples, common.tol, common.seed)?);
        let fit = match (summary.c_min, summary.c_max, summary.max_residual) {
            (Some(lo), Some(hi), Some(res)) => {
                format!(", c in [{lo:.9}, {hi:.9}], fit residual {res:.3e}")
            }
            _ => String::new(),
        };
        text.push_str(&format!(
            "{}: {:?} (one-flat residual {:.3e}{fit})\n",
            spec.name, summary.class, summary.one_flat_residual
        ));
        let mut v = serde_json::to_value(&summary).expect("summaries serialize");
        v.as_object_mut().unwrap().insert("geometry".into(), json!(spec.name));
        docs.push(v);
    }
    let value = if batch.all_catalog { Value::Array(docs) } else { docs.remove(0) };
    Ok(Outcome::ok(render(common, &value, text)))
}

fn report(common: &Common, batch: &Batch) -> Run<Outcome> {
    check_common(common)?;
    let tol = Tolerances { flatness: common.tol, ..Tolerances::default() };
    let mut docs = Vec::new();
    for spec in &specs(common, Some(batch))? {
        docs.push(curvature_report(spec, common.seed, common.samples, &tol)?);
    }
    let text = if batch.all_catalog {
        serde_json::to_string_pretty(&docs).expect("reports serialize")
    } else {
        docs[0].to_json()
    };
    Ok(Outcome::ok(text + "\n"))
}
