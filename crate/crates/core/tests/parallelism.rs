#![allow(clippy::needless_range_loop)]

use phg_core::catalog::{catalog_entry, Geometry};
use phg_core::chart::sampling::{gaussian_vec, rng, QuasiSampler};
use phg_core::chart::*;
use phg_core::parallelism::*;

fn frame(name: &str) -> StructureObjectW {
    match catalog_entry(name).unwrap().build().unwrap() {
        Geometry::Parallelism(w) => w,
        _ => panic!("{name} is not a parallelism"),
    }
}

fn pt(v: &[f64]) -> Point {
    Point(v.to_vec())
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / s).collect()
}

#[test]
fn lie_group_frames_are_flat_with_nonzero_integrability() {
    for name in ["axb", "heis3"] {
        let w = frame(name);
        let xs = QuasiSampler::new(&w.domain, 1).take(100);
        let ys = QuasiSampler::new(&w.domain, 2).take(100);
        let (mut r_max, mut lin_max, mut i_max) = (0.0f64, 0.0f64, 0.0f64);
        for (x, y) in xs.iter().zip(&ys) {
            r_max = r_max.max(nonlinear_curvature_w(&w, x, y).unwrap().norm());
            lin_max = lin_max.max(linear_curvature_w(&w, x).unwrap().norm());
            i_max = i_max.max(integrability_w(&w, x).unwrap().norm());
        }
        assert!(r_max <= 1e-8 && lin_max <= 1e-8, "{name}: R {r_max}, r {lin_max}");
        assert!(i_max >= 0.5, "{name}: I {i_max}");
    }
}

#[test]
fn perturbed_frame_linearizes_to_first_order() {
    let w = frame("pert2");
    let mut r = rng(3, 0);
    for x in QuasiSampler::in_region(w.domain.shrink(0.8), 4).take(20) {
        let xi = JetVector::order0(unit(gaussian_vec(2, &mut r)));
        let a = check_linearization_w(&w, &x, &xi, 1e-3).unwrap();
        let b = check_linearization_w(&w, &x, &xi, 5e-4).unwrap();
        assert!(a <= 1e-3, "residual {a} at {x:?}");
        let ratio = a / b;
        assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio} at {x:?}");
    }
}

#[test]
fn flat_frames_linearize_exactly() {
    for name in ["trans2", "axb"] {
        let w = frame(name);
        let x = pt(&[1.0, 0.2]);
        let x = if w.domain.contains(x.coords()) { x } else { pt(&[0.3, 0.2]) };
        let xi = JetVector::order0(vec![0.6, -0.8]);
        assert!(check_linearization_w(&w, &x, &xi, 1e-3).unwrap() <= 1e-8);
        assert_eq!(check_linearization_w(&w, &x, &JetVector::order0(vec![0.0, 0.0]), 1e-3).unwrap(), 0.0);
    }
}

#[test]
fn perturbed_frame_is_curved() {
    let w = frame("pert2");
    let xs = QuasiSampler::new(&w.domain, 1).take(20);
    let ys = QuasiSampler::new(&w.domain, 2).take(20);
    let worst = xs.iter().zip(&ys).map(|(x, y)| nonlinear_curvature_w(&w, x, y).unwrap().norm()).fold(0.0, f64::max);
    assert!(worst > 1e-3);
    assert!(linear_curvature_w(&w, &pt(&[0.4, 0.1])).unwrap().norm() > 1e-3);
    assert_eq!(nonlinear_curvature_w(&w, &pt(&[0.4, 0.1]), &pt(&[0.4, 0.1])).unwrap().max_abs(), 0.0);
}

#[test]
fn arrows_form_a_groupoid() {
    for name in ["axb", "heis3", "pert2"] {
        let w = frame(name);
        let pts = QuasiSampler::new(&w.domain, 9).take(30);
        for t in pts.chunks(3) {
            let (x, y, z) = (&t[0], &t[1], &t[2]);
            let xy = epsilon_arrow(&w, x, y).unwrap();
            let yz = epsilon_arrow(&w, y, z).unwrap();
            let xz = epsilon_arrow(&w, x, z).unwrap();
            assert!(xy.then(&yz).unwrap().f1().max_abs_diff(xz.f1()) <= 1e-12);
            assert!(epsilon_arrow(&w, x, x).unwrap().f1().max_abs_diff(&Matrix::identity(w.n)) <= 1e-12);
            let yx = epsilon_arrow(&w, y, x).unwrap();
            assert!(yx.f1().max_abs_diff(xy.inverse().f1()) <= 1e-12);
            let moved = xy.f1().mul(&w.frame(x.coords()).unwrap());
            assert!(moved.max_abs_diff(&w.frame(y.coords()).unwrap()) <= 1e-12);
        }
    }
}

#[test]
fn gamma_matches_derivative_of_coframe() {
    // Γⁱⱼₖ = −wⁱₐ ∂ⱼ(w⁻¹)ᵃₖ with ∂ⱼ taken by a dual-number direction
    for name in ["axb", "heis3", "pert2"] {
        let w = frame(name);
        let n = w.n;
        for x in QuasiSampler::new(&w.domain, 5).take(10) {
            let gamma = gamma_of_w(&w, &x).unwrap();
            let wx = w.frame(x.coords()).unwrap();
            for j in 0..n {
                let xd: Vec<Dual<f64>> = x
                    .coords()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| if i == j { Dual::variable(*v) } else { Dual::constant(*v) })
                    .collect();
                let dco = w.coframe(&xd).unwrap().map(|d| d.eps);
                let alt = wx.mul(&dco);
                for i in 0..n {
                    for k in 0..n {
                        assert!((gamma.get(&[i, j, k]) + alt[(i, k)]).abs() <= 1e-10);
                    }
                }
            }
        }
    }
}

#[test]
fn integrability_is_antisymmetric() {
    let w = frame("heis3");
    let i = integrability_w(&w, &pt(&[0.3, -0.2, 0.7])).unwrap();
    for a in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                assert_eq!(i.get(&[a, j, k]) + i.get(&[a, k, j]), 0.0);
            }
        }
    }
}

#[test]
fn eps_lifted_jets_leave_the_frame_invariant() {
    let mut r = rng(10, 0);
    for name in ["axb", "heis3", "pert2"] {
        let w = frame(name);
        for x in QuasiSampler::new(&w.domain, 6).take(10) {
            let jet = eps_lift_vector(&w, &gaussian_vec(w.n, &mut r), &x).unwrap();
            let l = formal_lie_derivative(&jet, &FrameField(&w), &x).unwrap();
            assert!(l.max_abs() <= 1e-10, "{name}: {}", l.max_abs());
        }
    }
}

#[test]
fn spencer_operator_of_eps_lift_is_covariant_derivative() {
    let w = frame("pert2");
    let xi0 = vec![ScalarExpr::parse_in("x2^2 - 0.5", 2).unwrap(), ScalarExpr::parse_in("sin(x1 + x2)", 2).unwrap()];
    let x = pt(&[0.3, -0.4]);
    let d = spencer_d(&EpsLiftedSection { w: &w, xi0: xi0.clone() }, &x).unwrap();
    let g = gamma_of_w(&w, &x).unwrap();
    let v: Vec<f64> = xi0.iter().map(|e| e.eval(x.coords()).unwrap()).collect();
    for i in 0..2 {
        for j in 0..2 {
            let grad = eval_jet(&xi0[i], x.coords(), 1).unwrap().partial(j);
            let want = grad - (0..2).map(|a| g.get(&[i, a, j]) * v[a]).sum::<f64>();
            assert!((d.get(&[i, j]) - want).abs() <= 1e-12);
        }
    }
    let prolonged = ExprJetSection::prolonged(xi0);
    assert!(spencer_d(&prolonged, &x).unwrap().max_abs() <= 1e-12);
}

#[test]
fn eps_lift_regressions() {
    let w = frame("axb");
    let jet = eps_lift_vector(&w, &[1.0, 0.0], &pt(&[2.0, 0.0])).unwrap();
    let xi1 = jet.xi1().unwrap();
    assert_eq!(xi1.as_slice(), &[0.5, 0.0, 0.0, 0.5]);
    let t = frame("trans2");
    let jet = eps_lift_vector(&t, &[0.3, 0.7], &pt(&[0.1, 0.1])).unwrap();
    assert_eq!(jet.xi1().unwrap().max_abs_diff(&Matrix::zeros(2)), 0.0);
}
