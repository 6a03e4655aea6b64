//! Value, gradient and Hessian of coordinate expressions.

use super::expr::ScalarExpr;
use super::scalar::{Dual, Scalar};
use crate::error::{GeometryError, Result};

pub const MAX_ORDER: usize = 2;

/// Value and partial derivatives of a scalar field at one point.
///
/// `gradient` is empty for order 0; `hessian` (row-major `n×n`) is empty
/// unless order 2 was requested.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarJet<S = f64> {
    pub order: usize,
    pub value: S,
    pub gradient: Vec<S>,
    pub hessian: Vec<S>,
}

impl<S: Scalar> ScalarJet<S> {
    pub fn partial(&self, i: usize) -> S {
        self.gradient[i]
    }

    pub fn second(&self, i: usize, j: usize) -> S {
        let n = self.gradient.len();
        self.hessian[i * n + j]
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(GeometryError::Order { requested: order, max: MAX_ORDER });
    }
    Ok(())
}

/// Exact partials by nested forward-mode duals, at a point whose coordinates
/// may themselves be dual numbers.
pub fn expr_jet<S: Scalar>(expr: &ScalarExpr, x: &[S], order: usize) -> Result<ScalarJet<S>> {
    check_order(order)?;
    let n = x.len();
    let value = expr.eval(x)?;
    let mut gradient = Vec::new();
    let mut hessian = Vec::new();
    match order {
        0 => {}
        1 => {
            gradient.reserve(n);
            let mut seeded: Vec<Dual<S>> = x.iter().map(|v| Dual::constant(*v)).collect();
            for i in 0..n {
                seeded[i].eps = S::one();
                gradient.push(expr.eval(&seeded)?.eps);
                seeded[i].eps = S::zero();
            }
        }
        _ => {
            gradient = vec![S::zero(); n];
            hessian = vec![S::zero(); n * n];
            for i in 0..n {
                for j in i..n {
                    // outer ε seeds direction i, inner ε seeds direction j
                    let seeded: Vec<Dual<Dual<S>>> = x
                        .iter()
                        .enumerate()
                        .map(|(k, v)| {
                            let inner = Dual::new(*v, if k == j { S::one() } else { S::zero() });
                            let outer = Dual::constant(if k == i { S::one() } else { S::zero() });
                            Dual::new(inner, outer)
                        })
                        .collect();
                    let r = expr.eval(&seeded)?;
                    if i == j {
                        gradient[i] = r.eps.re;
                    }
                    hessian[i * n + j] = r.eps.eps;
                    hessian[j * n + i] = r.eps.eps;
                }
            }
        }
    }
    Ok(ScalarJet { order, value, gradient, hessian })
}

/// Exact jet of `expr` at a real point, up to second order.
pub fn eval_jet(expr: &ScalarExpr, x: &[f64], order: usize) -> Result<ScalarJet> {
    expr_jet(expr, x, order)
}

/// Central-difference estimate of the same jet; error `O(step²)`.
pub fn fd_jet(expr: &ScalarExpr, x: &[f64], order: usize, step: f64) -> Result<ScalarJet> {
    check_order(order)?;
    if !(step > 0.0) {
        return Err(GeometryError::Domain(format!("finite-difference step must be positive, got {step}")));
    }
    let n = x.len();
    let f = |dx: &[(usize, f64)]| -> Result<f64> {
        let mut p = x.to_vec();
        for (i, d) in dx {
            p[*i] += d;
        }
        expr.eval(&p)
    };
    let value = f(&[])?;
    let mut gradient = Vec::new();
    let mut hessian = Vec::new();
    if order >= 1 {
        for i in 0..n {
            let plus = f(&[(i, step)])?;
            let minus = f(&[(i, -step)])?;
            gradient.push((plus - minus) / (2.0 * step));
        }
    }
    if order == 2 {
        hessian = vec![0.0; n * n];
        let h2 = step * step;
        for i in 0..n {
            let plus = f(&[(i, step)])?;
            let minus = f(&[(i, -step)])?;
            hessian[i * n + i] = (plus - 2.0 * value + minus) / h2;
            for j in (i + 1)..n {
                let pp = f(&[(i, step), (j, step)])?;
                let pm = f(&[(i, step), (j, -step)])?;
                let mp = f(&[(i, -step), (j, step)])?;
                let mm = f(&[(i, -step), (j, -step)])?;
                let v = (pp - pm - mp + mm) / (4.0 * h2);
                hessian[i * n + j] = v;
                hessian[j * n + i] = v;
            }
        }
    }
    Ok(ScalarJet { order, value, gradient, hessian })
}
