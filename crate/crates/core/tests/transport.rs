#![allow(clippy::needless_range_loop)]

use phg_core::catalog::{builtin_catalog, catalog_entry, Geometry};
use phg_core::chart::sampling::{random_orthogonal, rng};
use phg_core::chart::{Matrix, Point};
use phg_core::riemannian::metric_arrow_with;
use phg_core::transport::*;
use phg_core::GeometryError;

fn geometry(name: &str) -> Geometry {
    catalog_entry(name).unwrap().build().unwrap()
}

fn frame(name: &str) -> phg_core::parallelism::StructureObjectW {
    match geometry(name) {
        Geometry::Parallelism(w) => w,
        _ => unreachable!(),
    }
}

fn p(v: &[f64]) -> Point {
    Point(v.to_vec())
}

#[test]
fn identity_frame_translates() {
    let w = frame("trans2");
    let path = PathSpec::Polyline(vec![p(&[-0.5, -0.5]), p(&[0.2, 0.1]), p(&[0.4, -0.3])]);
    let y = transport_parallelism(&w, &path, &p(&[0.0, 0.2])).unwrap();
    assert!((y.0[0] - 0.9).abs() < 1e-12 && (y.0[1] - 0.4).abs() < 1e-12);
    let xi = transport_linear(&w, &path, &[0.3, -0.7]).unwrap();
    assert_eq!(xi, vec![0.3, -0.7]);
}

#[test]
fn axb_parallelism_matches_group_action() {
    // y = c·(x − x0) + y0 with c = y0₁/x0₁
    let w = frame("axb");
    let (x0, x1, y0) = ([0.8, -0.3], [1.8, 0.4], [1.2, -0.5]);
    let y = transport_parallelism(&w, &PathSpec::segment(p(&x0), p(&x1)), &p(&y0)).unwrap();
    let c = y0[0] / x0[0];
    for i in 0..2 {
        assert!((y.0[i] - (c * (x1[i] - x0[i]) + y0[i])).abs() < 1e-10);
    }
}

#[test]
fn axb_linear_transport_closed_form() {
    // along x2 = 0 the first component obeys dξ¹/dx¹ = ξ¹/x¹
    let w = frame("axb");
    let path = PathSpec::segment(p(&[1.0, 0.0]), p(&[2.0, 0.0]));
    let a = transport_linear(&w, &path, &[1.0, 0.0]).unwrap();
    let b = transport_linear(&w, &path, &[0.0, 1.0]).unwrap();
    assert!((a[0] - 2.0).abs() < 1e-12 && a[1].abs() < 1e-12);
    assert!(b[0].abs() < 1e-12 && (b[1] - 1.0).abs() < 1e-12);
}

#[test]
fn flat_frames_return_around_loops() {
    for name in ["trans2", "axb", "heis3"] {
        let w = frame(name);
        let n = w.n;
        let base = p(&vec![0.6; n]);
        let y0 = p(&vec![0.62; n]);
        let path = PathSpec::Rectangle { corner: base, h1: 0.25, h2: 0.2, plane: (0, n - 1) };
        let y = transport_parallelism(&w, &path, &y0).unwrap();
        let xi = transport_linear(&w, &path, &vec![0.4; n]).unwrap();
        for i in 0..n {
            assert!((y.0[i] - y0.0[i]).abs() <= 1e-8, "{name}");
            assert!((xi[i] - 0.4).abs() <= 1e-8, "{name}");
        }
    }
}

#[test]
fn zero_affine_structure_moves_rigidly() {
    let Geometry::Affine(a) = geometry("affine-zero") else { unreachable!() };
    let f1 = Matrix::from_rows(&[vec![1.2, 0.3], vec![-0.1, 0.9]]);
    let s0 = AffineState { f0: p(&[0.0, 0.1]), f1: f1.clone() };
    let path = PathSpec::Polyline(vec![p(&[-0.2, -0.2]), p(&[0.1, 0.3]), p(&[0.2, 0.1])]);
    let end = transport_affine(&a, &path, &s0).unwrap();
    let moved = f1.mul_vec(&[0.4, 0.3]);
    assert!((end.f0.0[0] - moved[0]).abs() < 1e-13);
    assert!((end.f0.0[1] - 0.1 - moved[1]).abs() < 1e-13);
    assert_eq!(end.f1, f1);
}

#[test]
fn pulled_back_flat_affine_loop_returns() {
    let Geometry::Affine(a) = geometry("affine-pullback-flat") else { unreachable!() };
    let s0 = AffineState { f0: p(&[0.1, 0.0]), f1: Matrix::from_rows(&[vec![1.0, 0.2], vec![0.1, 1.1]]) };
    let path = PathSpec::square(p(&[-0.3, -0.2]), 0.4, (0, 1));
    let end = transport_affine(&a, &path, &s0).unwrap();
    assert!(dist(&end.f0.0, &s0.f0.0) <= 1e-7);
    assert!(end.f1.max_abs_diff(&s0.f1) <= 1e-7);
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

fn metric_state(name: &str, x: &[f64], y: &[f64], seed: u64) -> (phg_core::riemannian::MetricPair, AffineState) {
    let Geometry::Riemannian(m) = geometry(name) else { unreachable!() };
    let q = random_orthogonal(2, &mut rng(seed, 0));
    let arrow = metric_arrow_with(&m, &p(x), &p(y), &q).unwrap();
    let s = AffineState { f0: p(y), f1: arrow.f1().clone() };
    (m, s)
}

#[test]
fn metric_constraint_drift() {
    let path = PathSpec::segment(p(&[-0.5, 0.0]), p(&[0.5, 0.0]));
    // starting the image at the pole keeps every rotated image inside the box
    for seed in 0..5 {
        let (m, s) = metric_state("sphere2", &[-0.5, 0.0], &[0.0, 0.0], seed);
        let (_, drift) = transport_riemann(&m, &path, &s).unwrap();
        assert!(drift <= 1e-8, "{drift}");
        let (m, s) = metric_state("euclid2", &[-0.3, 0.0], &[0.0, 0.0], seed);
        let short = PathSpec::segment(p(&[-0.3, 0.0]), p(&[0.3, 0.0]));
        assert!(transport_riemann(&m, &short, &s).unwrap().1 <= 1e-10);
    }
    // the mismatched pair's system is unstable; this start stays in the chart
    let (m, s) = metric_state("mismatch2", &[-0.5, 0.0], &[-0.5, 0.2], 3);
    let (_, drift) = transport_riemann(&m, &path, &s).unwrap();
    assert!(drift >= 1e-3, "{drift}");
}

#[test]
fn non_metric_start_is_rejected() {
    let Geometry::Riemannian(m) = geometry("sphere2") else { unreachable!() };
    let s = AffineState { f0: p(&[0.3, 0.0]), f1: Matrix::identity(2) };
    let path = PathSpec::segment(p(&[0.0, 0.0]), p(&[0.1, 0.0]));
    assert!(matches!(transport_riemann(&m, &path, &s), Err(GeometryError::NotMetricArrow { .. })));
}

#[test]
fn leaving_the_chart_is_reported() {
    let w = frame("trans2");
    let path = PathSpec::segment(p(&[0.0, 0.0]), p(&[0.8, 0.0]));
    assert!(matches!(transport_parallelism(&w, &path, &p(&[0.5, 0.0])), Err(GeometryError::DomainEscape { .. })));
    let outside = PathSpec::segment(p(&[0.0, 0.0]), p(&[1.5, 0.0]));
    assert!(matches!(transport_linear(&w, &outside, &[1.0, 0.0]), Err(GeometryError::DomainEscape { .. })));
}

#[test]
fn rk4_is_fourth_order() {
    let w = frame("pert2");
    let path = PathSpec::Polyline(vec![p(&[-1.0, -1.0]), p(&[0.2, -0.4]), p(&[1.0, 0.3])]);
    let y0 = p(&[-0.9, -0.9]);
    let run = |n: usize| Stepper::new(n).parallelism(&w, &path, &y0).unwrap().0;
    let (a, b, c) = (run(8), run(16), run(32));
    let ratio = dist(&a, &b) / dist(&b, &c);
    assert!((ratio - 16.0).abs() < 3.0, "{ratio}");
}

#[test]
fn concatenated_paths_compose() {
    let w = frame("pert2");
    let p1 = PathSpec::Polyline(vec![p(&[-0.5, 0.0]), p(&[0.1, 0.4])]);
    let p2 = PathSpec::Polyline(vec![p(&[0.1, 0.4]), p(&[0.3, -0.2]), p(&[0.9, 0.0])]);
    let xi0 = [0.3, 0.8];
    let stepwise = transport_linear(&w, &p2, &transport_linear(&w, &p1, &xi0).unwrap()).unwrap();
    let joined = transport_linear(&w, &p1.concat(&p2).unwrap(), &xi0).unwrap();
    assert!(dist(&stepwise, &joined) <= 1e-9);
}

#[test]
fn flat_geometries_are_path_independent() {
    let a = p(&[-0.3, -0.2]);
    let b = p(&[0.3, 0.25]);
    let via1 = PathSpec::Polyline(vec![a.clone(), p(&[0.3, -0.2]), b.clone()]);
    let via2 = PathSpec::Polyline(vec![a.clone(), p(&[-0.3, 0.25]), b.clone()]);
    for spec in builtin_catalog().into_iter().filter(|s| s.expect_flat == Some(true)) {
        let g = spec.build().unwrap();
        let shift = |v: &PathSpec| -> PathSpec {
            // move the paths into the box of every entry
            let c: Vec<f64> = g.domain().bounds.iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect();
            let s = 0.5 * g.domain().min_width() / 2.0;
            PathSpec::Polyline(
                v.vertices()
                    .iter()
                    .map(|q| {
                        let mut x: Vec<f64> = c.clone();
                        x[0] += s * q.0[0];
                        x[1] += s * q.0[1];
                        Point(x)
                    })
                    .collect(),
            )
        };
        let (q1, q2) = (shift(&via1), shift(&via2));
        let start = q1.vertices()[0].clone();
        let (e1, e2) = match &g {
            Geometry::Parallelism(w) => {
                let y0 = LoopStart::default_for(&g, &start, 1).unwrap().target;
                let a1 = transport_parallelism(w, &q1, &y0).unwrap();
                let a2 = transport_parallelism(w, &q2, &y0).unwrap();
                (a1.0, a2.0)
            }
            Geometry::Affine(_) | Geometry::Riemannian(_) => {
                let st = LoopStart::default_for(&g, &start, 1).unwrap();
                let s0 = AffineState { f0: st.target, f1: st.f1 };
                let run = |q: &PathSpec| match &g {
                    Geometry::Affine(a) => transport_affine(a, q, &s0).unwrap(),
                    Geometry::Riemannian(m) => transport_riemann(m, q, &s0).unwrap().0,
                    _ => unreachable!(),
                };
                let (a1, a2) = (run(&q1), run(&q2));
                let mut v1 = a1.f0.0.clone();
                v1.extend_from_slice(a1.f1.as_slice());
                let mut v2 = a2.f0.0.clone();
                v2.extend_from_slice(a2.f1.as_slice());
                (v1, v2)
            }
        };
        assert!(dist(&e1, &e2) <= 1e-7, "{}: {}", spec.name, dist(&e1, &e2));
    }
}

#[test]
fn holonomy_matches_linear_curvature_on_perturbed_frame() {
    let g = geometry("pert2");
    let r = loop_defect(LoopKind::Linear, &g, &p(&[0.5, 0.5]), (0, 1), 1e-2).unwrap();
    let mismatch = r.mismatch.unwrap();
    assert!(mismatch <= 0.05, "{r:?}");
    assert!((r.order_ratio - 4.0).abs() < 0.2, "{}", r.order_ratio);
}

#[test]
fn flat_loops_have_no_defect() {
    for name in ["trans2", "axb"] {
        let g = geometry(name);
        let base = p(&[0.6, 0.1]);
        for kind in [LoopKind::Linear, LoopKind::Parallelism] {
            let r = loop_defect(kind, &g, &base, (0, 1), 0.1).unwrap();
            assert!(r.defects.iter().all(|d| *d <= 1e-8), "{name} {kind:?} {r:?}");
            assert!(r.extrapolated <= 1e-6);
        }
    }
}

#[test]
fn wrong_loop_kind_is_rejected() {
    assert!(matches!(
        loop_defect(LoopKind::Linear, &geometry("sphere2"), &p(&[0.0, 0.0]), (0, 1), 0.1),
        Err(GeometryError::Schema(_))
    ));
}

#[test]
fn catalog_certification() {
    let opts = CertifyOptions { samples: 40, ..Default::default() };
    for spec in builtin_catalog() {
        let g = spec.build().unwrap();
        let c = certify_flat(&g, &opts).unwrap();
        assert!(c.consistent, "{}: {:?}", spec.name, c.evidence);
        let e = &c.evidence;
        if spec.expect_flat.unwrap() {
            assert_eq!(c.verdict, Verdict::Flat, "{}: {e:?}", spec.name);
            assert!(e.r_max <= 1e-8 && e.lin_max <= 1e-8 && e.holonomy <= 1e-8, "{}: {e:?}", spec.name);
        } else {
            assert_eq!(c.verdict, Verdict::NotFlat, "{}: {e:?}", spec.name);
            let floor = 100.0 * opts.tol;
            assert!(e.r_max >= floor && e.lin_max >= floor && e.holonomy >= floor, "{}: {e:?}", spec.name);
        }
    }
}
