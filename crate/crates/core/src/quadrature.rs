//! Panelized tensor-product Gauss–Legendre quadrature on boxes in `R^d`.
//!
//! Each axis is cut into equal panels with a fixed-order rule per panel.
//! [`integrate_adaptive`] doubles the panel count until every component of
//! a vector-valued integrand settles to a relative tolerance. Partial sums
//! are reduced in a fixed order, so results do not depend on the thread
//! count.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Nodes per panel per axis.
pub const RULE_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let m = order.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, z);
                dp = d;
                let step = p / d;
                z -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[order - 1 - i] = z;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// The shared order-[`RULE_ORDER`] rule.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(RULE_ORDER))
    }

    /// One-dimensional composite rule on `[a, b]` with `panels` panels.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, panels: usize, f: F) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let lo = a + h * k as f64;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(lo + 0.5 * h * (x + 1.0));
            }
            total += 0.5 * h * s;
        }
        total
    }

    /// Composite rule whose panels are the gaps of a sorted breakpoint list,
    /// each split into `sub` equal pieces.
    pub fn integrate_breaks<F: Fn(f64) -> f64>(&self, breaks: &[f64], sub: usize, f: F) -> f64 {
        breaks
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| self.integrate(w[0], w[1], sub, &f))
            .sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite nodes and weights along one axis.
fn axis_nodes(lo: f64, hi: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::standard();
    let h = (hi - lo) / panels as f64;
    let mut xs = Vec::with_capacity(panels * RULE_ORDER);
    let mut ws = Vec::with_capacity(panels * RULE_ORDER);
    for k in 0..panels {
        let a = lo + h * k as f64;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            xs.push(a + 0.5 * h * (x + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// Tensor-product rule over the box `[lo_j, hi_j]` with `panels` panels per
/// axis. The integrand writes `n_out` values into its output slice.
pub fn integrate_box<F>(lo: &[f64], hi: &[f64], panels: usize, n_out: usize, f: &F) -> Vec<f64>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let d = lo.len();
    assert!((1..=3).contains(&d) && hi.len() == d);
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..d).map(|j| axis_nodes(lo[j], hi[j], panels)).collect();
    let (x0, w0) = &axes[0];
    let partials: Vec<Vec<f64>> = x0
        .par_iter()
        .zip(w0.par_iter())
        .map(|(&a, &wa)| {
            let mut acc = vec![0.0; n_out];
            let mut vals = vec![0.0; n_out];
            let mut x = [a, 0.0, 0.0];
            match d {
                1 => {
                    f(&x[..1], &mut vals);
                    for (s, v) in acc.iter_mut().zip(&vals) {
                        *s += wa * v;
                    }
                }
                2 => {
                    for (&b, &wb) in axes[1].0.iter().zip(&axes[1].1) {
                        x[1] = b;
                        f(&x[..2], &mut vals);
                        let w = wa * wb;
                        for (s, v) in acc.iter_mut().zip(&vals) {
                            *s += w * v;
                        }
                    }
                }
                _ => {
                    for (&b, &wb) in axes[1].0.iter().zip(&axes[1].1) {
                        x[1] = b;
                        for (&c, &wc) in axes[2].0.iter().zip(&axes[2].1) {
                            x[2] = c;
                            f(&x[..3], &mut vals);
                            let w = wa * wb * wc;
                            for (s, v) in acc.iter_mut().zip(&vals) {
                                *s += w * v;
                            }
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n_out];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Result of [`integrate_adaptive`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveResult {
    pub values: Vec<f64>,
    /// Panels per axis of the accepted estimate.
    pub panels: usize,
    /// Largest relative change between the last two refinements.
    pub rel_change: f64,
}

/// Largest panel count tried per axis for a given dimension.
pub fn max_panels(d: usize) -> usize {
    match d {
        1 => 4096,
        2 => 128,
        _ => 16,
    }
}

/// Doubles the panel count, starting from `start_panels`, until every
/// component changes by at most `rel_tol` relative to its new value.
pub fn integrate_adaptive<F>(
    lo: &[f64],
    hi: &[f64],
    start_panels: usize,
    n_out: usize,
    rel_tol: f64,
    f: &F,
) -> Result<AdaptiveResult>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let cap = max_panels(lo.len());
    let mut panels = start_panels.max(1);
    let mut prev = integrate_box(lo, hi, panels, n_out, f);
    let mut change = f64::INFINITY;
    while panels * 2 <= cap {
        panels *= 2;
        let next = integrate_box(lo, hi, panels, n_out, f);
        change = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| relative_change(*a, *b))
            .fold(0.0, f64::max);
        prev = next;
        if change <= rel_tol {
            return Ok(AdaptiveResult {
                values: prev,
                panels,
                rel_change: change,
            });
        }
    }
    Err(Error::QuadratureNotConverged { panels, change })
}

fn relative_change(old: f64, new: f64) -> f64 {
    if old == new {
        0.0
    } else {
        (new - old).abs() / new.abs().max(old.abs())
    }
}
