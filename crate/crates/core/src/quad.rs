//! One-dimensional quadrature: adaptive Simpson for one-off integrals and a
//! cached cumulative grid for integrals that are evaluated pointwise inside
//! propagation loops.

use std::cell::Cell;
use std::sync::Arc;

use crate::error::{Error, Result};

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    (fa + 4.0 * fm + fb) * h / 6.0
}

// Non-integrable singularities never converge; the budget turns them into a
// quadrature error in bounded time instead of exponential-in-depth work.
const EVAL_BUDGET: u32 = 400_000;

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    floor: f64,
    depth: u32,
    budget: &Cell<u32>,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    if budget.get() < 2 {
        return Err(Error::Quadrature { a, b });
    }
    budget.set(budget.get() - 2);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let err = left + right - whole;
    // `floor` is the roundoff scale of the whole integral: refining below it
    // only chases evaluation noise, so it caps the per-panel demand. A
    // genuine non-integrable pole keeps |err| of the order of the (growing)
    // panel values and still runs the budget out.
    if err.abs() <= 15.0 * tol.max(floor) || (b - a).abs() < 1e-14 {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature { a, b });
    }
    let half_tol = 0.5 * tol;
    Ok(adapt(f, a, m, fa, flm, fm, left, half_tol, floor, depth - 1, budget)?
        + adapt(f, m, b, fm, frm, fb, right, half_tol, floor, depth - 1, budget)?)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    let floor = 1e-13 * (whole.abs() + 1.0);
    adapt(
        &f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol,
        floor,
        44,
        &Cell::new(EVAL_BUDGET),
    )
}

/// Cumulative integral of a smooth function over [a, b], cached on a uniform
/// grid so that single-point evaluations cost O(1). Each grid cell is
/// integrated with Simpson's rule (two half-panels), and an arbitrary query
/// point adds one more Simpson panel from the nearest node below it; queries
/// beyond `b` fall back to adaptive quadrature from `b`.
pub struct CumulativeIntegral {
    a: f64,
    b: f64,
    step: f64,
    nodes: Vec<f64>,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CumulativeIntegral {
    pub fn new(f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, a: f64, b: f64, n: usize) -> Self {
        assert!(b > a && n >= 2);
        let step = (b - a) / n as f64;
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(0.0);
        let mut acc = 0.0;
        let mut f_lo = f(a);
        for k in 0..n {
            let x0 = a + k as f64 * step;
            let x1 = x0 + step;
            let f_hi = f(x1);
            acc += simpson(f_lo, f(0.5 * (x0 + x1)), f_hi, step);
            nodes.push(acc);
            f_lo = f_hi;
        }
        Self { a, b, step, nodes, f }
    }

    /// Integral of f from `a` to `x`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.a {
            if x == self.a {
                return 0.0;
            }
            // below the cached domain: rare, integrate directly
            return -adaptive_simpson(|u| (self.f)(u), x, self.a, 1e-12).unwrap_or(0.0);
        }
        if x >= self.b {
            let tail = if x == self.b {
                0.0
            } else {
                adaptive_simpson(|u| (self.f)(u), self.b, x, 1e-12).unwrap_or(0.0)
            };
            return self.nodes[self.nodes.len() - 1] + tail;
        }
        let idx = ((x - self.a) / self.step).floor() as usize;
        let idx = idx.min(self.nodes.len() - 2);
        let x0 = self.a + idx as f64 * self.step;
        let f = &self.f;
        self.nodes[idx] + simpson(f(x0), f(0.5 * (x0 + x)), f(x), x - x0)
    }

    pub fn total(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
}
