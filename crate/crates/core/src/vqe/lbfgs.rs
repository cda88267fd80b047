//! Limited-memory BFGS with Armijo backtracking, the quasi-Newton loop both
//! optimization phases share. Objectives report value and gradient together
//! because the reverse-mode gradient produces the value as a byproduct.

use std::collections::VecDeque;

use crate::Result;

pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&mut self, x: &[f64]) -> Result<f64>;
    fn value_grad(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum StopReason {
    /// Successive values moved less than the value tolerance.
    ValueTol,
    /// Gradient infinity norm fell under the gradient tolerance.
    GradTol,
    MaxIters,
    /// Backtracking found no acceptable step even along steepest descent.
    LineSearchFailed,
    /// Objective already at its guarded floor; nothing to optimize.
    Floor,
}

#[derive(Clone, Debug)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iters: usize,
    pub value_tol: f64,
    pub grad_tol: f64,
    pub c1: f64,
    pub shrink: f64,
    pub max_line_steps: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 8,
            max_iters: 500,
            value_tol: 1e-7,
            grad_tol: 1e-6,
            c1: 1e-4,
            shrink: 0.5,
            max_line_steps: 25,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimization {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub reason: StopReason,
    /// Accepted objective values, one per iteration plus the start.
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Two-loop recursion: approximate -H g from the stored (s, y) pairs.
fn direction(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Backtracking Armijo search. Objective evaluation errors at a trial point
/// count as rejections: extreme trial steps may legitimately push the
/// simulation into numerical failure, and shrinking recovers.
fn line_search<O: Objective>(
    obj: &mut O,
    x: &[f64],
    f: f64,
    d: &[f64],
    dg: f64,
    mut alpha: f64,
    opts: &LbfgsOptions,
) -> Option<(Vec<f64>, f64)> {
    for _ in 0..opts.max_line_steps {
        let xt: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        if let Ok(ft) = obj.value(&xt) {
            if ft.is_finite() && ft <= f + opts.c1 * alpha * dg {
                return Some((xt, ft));
            }
        }
        alpha *= opts.shrink;
    }
    None
}

pub fn minimize<O: Objective>(
    obj: &mut O,
    x0: &[f64],
    opts: &LbfgsOptions,
) -> Result<Minimization> {
    debug_assert_eq!(x0.len(), obj.dim());
    let mut x = x0.to_vec();
    let (mut f, mut g) = obj.value_grad(&x)?;
    let mut trace = vec![f];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    for it in 1..=opts.max_iters {
        if inf_norm(&g) <= opts.grad_tol {
            return Ok(Minimization { x, value: f, iterations: it - 1, reason: StopReason::GradTol, trace });
        }

        let mut d = direction(&g, &mem);
        let mut dg = dot(&d, &g);
        if !(dg < 0.0) {
            // Curvature information went stale; fall back to steepest descent.
            mem.clear();
            d = g.iter().map(|v| -v).collect();
            dg = -dot(&g, &g);
        }
        let alpha0 = if mem.is_empty() { (1.0 / norm2(&g)).min(1.0) } else { 1.0 };

        let mut step = line_search(obj, &x, f, &d, dg, alpha0, opts);
        if step.is_none() && !mem.is_empty() {
            mem.clear();
            let d2: Vec<f64> = g.iter().map(|v| -v).collect();
            let dg2 = -dot(&g, &g);
            let a2 = (1.0 / norm2(&g)).min(1.0);
            step = line_search(obj, &x, f, &d2, dg2, a2, opts);
        }
        let Some((xn, _)) = step else {
            return Ok(Minimization { x, value: f, iterations: it - 1, reason: StopReason::LineSearchFailed, trace });
        };

        let (fn_, gn) = obj.value_grad(&xn)?;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm2(&s) * norm2(&y) {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        let moved = (f - fn_).abs();
        x = xn;
        f = fn_;
        g = gn;
        trace.push(f);
        if moved <= opts.value_tol {
            return Ok(Minimization { x, value: f, iterations: it, reason: StopReason::ValueTol, trace });
        }
    }
    Ok(Minimization { x, value: f, iterations: opts.max_iters, reason: StopReason::MaxIters, trace })
}
