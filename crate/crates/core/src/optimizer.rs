// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense BFGS with a strong-Wolfe line search.
//!
//! The inverse Hessian approximation starts as the identity, is rescaled by
//! `yᵀs / yᵀy` before the first update and is updated only when the
//! curvature condition `yᵀs > 0` holds. Every accepted step satisfies the
//! sufficient-decrease condition, so the objective never increases.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iters: usize,
    /// Stop when `max_i |∇f_i|` falls below this.
    pub grad_tol: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 5_000,
            grad_tol: 1e-9,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfgsStatus {
    GradientTolerance,
    MaxIterations,
    /// No step satisfying the Wolfe conditions could be found; usually means
    /// the objective is flat to machine precision.
    LineSearchStalled,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: BfgsStatus,
    /// Objective after each accepted iteration, starting with the initial point.
    pub history: Vec<f64>,
}

impl BfgsOutcome {
    pub fn converged(&self) -> bool {
        self.status == BfgsStatus::GradientTolerance
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Point {
    x: Vec<f64>,
    value: f64,
    grad: Vec<f64>,
}

struct Objective<F> {
    f: F,
    evaluations: usize,
}

impl<F> Objective<F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn eval(&mut self, x: Vec<f64>) -> Result<Point> {
        self.evaluations += 1;
        let (value, grad) = (self.f)(&x)?;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::OptimizerAbort(format!(
                "non-finite objective or gradient after {} evaluations",
                self.evaluations
            )));
        }
        Ok(Point { x, value, grad })
    }
}

fn along(origin: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
    origin.iter().zip(dir).map(|(o, d)| o + t * d).collect()
}

/// Minimizer of the cubic interpolating `(a, fa, da)` and `(b, fb, db)`,
/// safeguarded into the interior of the bracket.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let lo = a.min(b);
    let hi = a.max(b);
    let mid = 0.5 * (a + b);
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if !t.is_finite() || t < lo + margin || t > hi - margin {
        mid
    } else {
        t
    }
}

/// Strong-Wolfe line search (bracketing then zoom). Returns `None` when no
/// acceptable step was found within the budget.
fn line_search<F>(
    obj: &mut Objective<F>,
    start: &Point,
    dir: &[f64],
    t_init: f64,
    opts: &BfgsOptions,
) -> Result<Option<(Point, f64)>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let f0 = start.value;
    let d0 = dot(&start.grad, dir);
    if d0 >= 0.0 {
        return Ok(None);
    }
    let mut budget = opts.max_line_search;
    let (mut t_prev, mut f_prev, mut d_prev) = (0.0, f0, d0);
    let mut t = t_init;
    let mut first = true;
    loop {
        if budget == 0 {
            return Ok(None);
        }
        budget -= 1;
        let p = obj.eval(along(&start.x, dir, t))?;
        let dp = dot(&p.grad, dir);
        if p.value > f0 + opts.c1 * t * d0 || (!first && p.value >= f_prev) {
            return zoom(
                obj,
                start,
                dir,
                (t_prev, f_prev, d_prev),
                (t, p.value, dp),
                budget,
                opts,
            );
        }
        if dp.abs() <= -opts.c2 * d0 {
            return Ok(Some((p, t)));
        }
        if dp >= 0.0 {
            return zoom(
                obj,
                start,
                dir,
                (t, p.value, dp),
                (t_prev, f_prev, d_prev),
                budget,
                opts,
            );
        }
        first = false;
        t_prev = t;
        f_prev = p.value;
        d_prev = dp;
        t *= 2.0;
    }
}

fn zoom<F>(
    obj: &mut Objective<F>,
    start: &Point,
    dir: &[f64],
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    mut budget: usize,
    opts: &BfgsOptions,
) -> Result<Option<(Point, f64)>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let f0 = start.value;
    let d0 = dot(&start.grad, dir);
    while budget > 0 {
        budget -= 1;
        if (hi.0 - lo.0).abs() < 1e-16 * lo.0.abs().max(1.0) {
            break;
        }
        let t = cubic_min(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2);
        let p = obj.eval(along(&start.x, dir, t))?;
        let dp = dot(&p.grad, dir);
        if p.value > f0 + opts.c1 * t * d0 || p.value >= lo.1 {
            hi = (t, p.value, dp);
        } else {
            if dp.abs() <= -opts.c2 * d0 {
                return Ok(Some((p, t)));
            }
            if dp * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (t, p.value, dp);
        }
    }
    // Budget exhausted: accept the best sufficient-decrease point if it moved.
    if lo.0 > 0.0 && lo.1 < f0 {
        let p = obj.eval(along(&start.x, dir, lo.0))?;
        if p.value < f0 {
            return Ok(Some((p, lo.0)));
        }
    }
    Ok(None)
}

/// Minimizes `f` from `x0`. `f` returns the value and gradient.
pub fn minimize<F>(f: F, x0: Vec<f64>, opts: &BfgsOptions) -> Result<BfgsOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut obj = Objective { f, evaluations: 0 };
    let mut cur = obj.eval(x0)?;
    let mut history = vec![cur.value];
    // row-major inverse Hessian approximation
    let mut h_inv = vec![0.0; n * n];
    for i in 0..n {
        h_inv[i * n + i] = 1.0;
    }
    let mut scaled = false;
    let mut iterations = 0;
    let status = loop {
        if max_norm(&cur.grad) < opts.grad_tol {
            break BfgsStatus::GradientTolerance;
        }
        if iterations >= opts.max_iters {
            break BfgsStatus::MaxIterations;
        }
        let mut dir: Vec<f64> = (0..n)
            .map(|i| -dot(&h_inv[i * n..(i + 1) * n], &cur.grad))
            .collect();
        if dot(&dir, &cur.grad) >= 0.0 {
            // lost positive definiteness; restart from steepest descent
            h_inv.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                h_inv[i * n + i] = 1.0;
            }
            scaled = false;
            dir = cur.grad.iter().map(|g| -g).collect();
        }
        let t_init = if iterations == 0 {
            (1.0 / max_norm(&dir)).min(1.0)
        } else {
            1.0
        };
        let Some((next, _t)) = line_search(&mut obj, &cur, &dir, t_init, opts)? else {
            break BfgsStatus::LineSearchStalled;
        };
        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next
            .grad
            .iter()
            .zip(&cur.grad)
            .map(|(a, b)| a - b)
            .collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if !scaled {
                let gamma = sy / dot(&y, &y);
                h_inv.iter_mut().for_each(|v| *v *= gamma);
                scaled = true;
            }
            // H ← (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n)
                .map(|i| dot(&h_inv[i * n..(i + 1) * n], &y))
                .collect();
            let yhy = dot(&y, &hy);
            let coef = rho * rho * yhy + rho;
            for i in 0..n {
                let row = &mut h_inv[i * n..(i + 1) * n];
                for j in 0..n {
                    row[j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        cur = next;
        iterations += 1;
        history.push(cur.value);
    };
    Ok(BfgsOutcome {
        x: cur.x,
        value: cur.value,
        gradient: cur.grad,
        iterations,
        evaluations: obj.evaluations,
        status,
        history,
    })
}
