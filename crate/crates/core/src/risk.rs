//! Population excess risk `‖f − g‖²_{L²(μ)}`.
//!
//! The Monte Carlo estimator integrates the regret closed form
//! `(f(x) − g(x))²` over input draws only, so label noise adds no variance.
//! Draws are split into fixed-size chunks, chunk `j` using stream `j` of the
//! seed, and chunk moments are merged in chunk order: results do not depend
//! on the number of threads.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::{bump_generic, moduli::single_modulus, MultiIndex};
use crate::error::{Error, Result};
use crate::interpolant::BumpInterpolant;
use crate::model::DistributionSpec;
use crate::quadrature::GaussLegendre;
use crate::rng;
use crate::stats::Moments;

/// Input draws per Monte Carlo chunk.
pub const CHUNK: usize = 4096;
/// Smallest accepted Monte Carlo sample size.
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskMethod {
    MonteCarlo,
    SemiAnalytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub method: RiskMethod,
}

impl RiskEstimate {
    fn from_moments(m: Moments) -> Self {
        RiskEstimate {
            mean: m.mean,
            stderr: m.stderr(),
            samples: m.count,
            method: RiskMethod::MonteCarlo,
        }
    }
}

fn check_samples(m: usize) -> Result<()> {
    if m < MIN_SAMPLES {
        return Err(Error::InvalidParams(format!(
            "need at least {MIN_SAMPLES} Monte Carlo samples, got {m}"
        )));
    }
    Ok(())
}

/// Chunked, order-fixed Monte Carlo mean of `h(x, rng)` over input draws.
fn chunked_mean<H>(spec: &DistributionSpec, m: usize, seed: u64, h: H) -> Result<Moments>
where
    H: Fn(&[f64], &mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let chunks = m.div_ceil(CHUNK);
    let parts: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|j| {
            let len = CHUNK.min(m - j * CHUNK);
            let mut r = rng::stream(seed, j as u64);
            let xs = spec.draw_inputs(&mut r, len)?;
            Ok(xs.chunks(spec.dim()).map(|x| h(x, &mut r)).collect())
        })
        .collect();
    let mut total = Moments::default();
    for part in parts {
        total = total.merge(part?);
    }
    Ok(total)
}

/// `(1/m) Σ_j (f(X_j) − g(X_j))²` with `X_j ~ μ_x`.
pub fn excess_risk_mc<F>(predictor: &F, spec: &DistributionSpec, m: usize, seed: u64) -> Result<RiskEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_samples(m)?;
    let moments = chunked_mean(spec, m, seed, |x, _| {
        let e = predictor(x) - spec.g(x);
        e * e
    })?;
    Ok(RiskEstimate::from_moments(moments))
}

/// `E[(f(x) − y)²] − E[(g(x) − y)²]` estimated jointly over `(x, y)` draws.
/// Its expectation equals the excess risk.
pub fn loss_difference_mc<F>(predictor: &F, spec: &DistributionSpec, m: usize, seed: u64) -> Result<RiskEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_samples(m)?;
    let moments = chunked_mean(spec, m, seed, |x, r| {
        let y = spec.draw_label(r, x);
        let (a, b) = (predictor(x) - y, spec.g(x) - y);
        a * a - b * b
    })?;
    Ok(RiskEstimate::from_moments(moments))
}

/// Monte Carlo estimate of the Bayes risk `E[σ(x)²]`.
pub fn bayes_risk_mc(spec: &DistributionSpec, m: usize, seed: u64) -> Result<RiskEstimate> {
    check_samples(m)?;
    let moments = chunked_mean(spec, m, seed, |x, _| spec.sigma2(x))?;
    Ok(RiskEstimate::from_moments(moments))
}

/// `M_2 = ∫ψ_1²` in dimension `d`.
pub fn unit_bump_l2_squared(d: usize) -> Result<f64> {
    static CACHE: [OnceLock<f64>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = CACHE
        .get(d.wrapping_sub(1))
        .ok_or_else(|| Error::InvalidParams(format!("d = {d} unsupported")))?;
    if let Some(v) = slot.get() {
        return Ok(*v);
    }
    let v = single_modulus(&MultiIndex::zero(d), 2.0)?;
    Ok(*slot.get_or_init(|| v))
}

/// `∫_{−R}^{R} ψ_r(x − c)² dx` for a bump on the line that may cross the
/// domain boundary, by Gauss–Legendre on the clipped support with breaks at
/// the center and the plateau edges.
fn clipped_line_integral(c: f64, r: f64, big_r: f64) -> f64 {
    let (lo, hi) = ((c - r).max(-big_r), (c + r).min(big_r));
    if lo >= hi {
        return 0.0;
    }
    let mut breaks = vec![lo, hi];
    for b in [c - r / 2.0, c, c + r / 2.0] {
        if b > lo && b < hi {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    GaussLegendre::standard().integrate_breaks(&breaks, 16, |x| {
        let v = bump_generic(&[c], r, &[x]);
        v * v
    })
}

/// Exact excess risk `(1/|Ω|) Σ_i y_i² ∫_Ω ψ_i²` of a bump interpolant under
/// the uniform pure-noise model. Supports inside the domain contribute
/// `y_i² r_i^d M_2`; on the line, supports crossing the boundary are
/// integrated over the clipped interval. In higher dimension a crossing
/// support is an error.
pub fn excess_risk_semianalytic(f: &BumpInterpolant, spec: &DistributionSpec) -> Result<RiskEstimate> {
    if !spec.is_uniform_pure_noise() {
        return Err(Error::UnsupportedSpec(
            "the exact risk needs g = 0 and a uniform density".into(),
        ));
    }
    let d = spec.dim();
    if f.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: f.dim(),
        });
    }
    let m2 = unit_bump_l2_squared(d)?;
    let big_r = spec.radius();
    let mut total = 0.0;
    for (i, (&y, &r)) in f.weights().iter().zip(f.support_radii()).enumerate() {
        if y == 0.0 {
            continue;
        }
        let c = f.center(i);
        let reach = c.iter().map(|v| v * v).sum::<f64>().sqrt() + r;
        let mass = if reach <= big_r {
            r.powi(d as i32) * m2
        } else if d == 1 {
            clipped_line_integral(c[0], r, big_r)
        } else {
            return Err(Error::UnsupportedSpec(format!(
                "bump {i} crosses the domain boundary in d = {d}"
            )));
        };
        total += y * y * mass;
    }
    Ok(RiskEstimate {
        mean: total / spec.domain_volume(),
        stderr: 0.0,
        samples: 0,
        method: RiskMethod::SemiAnalytic,
    })
}
