//! Local oscillation checks for bump sums.
//!
//! The exact variant (d = 1, k = 1) tests
//! `|u(x1) − u(x0)|^p ≤ (2δ)^{p−1} ∫_{x0−2δ}^{x0+2δ} |u'|^p` for `|x1 − x0| ≤ δ`,
//! which is Hölder's inequality on the segment. The diagnostic variant
//! records `|u(x1) − u(x0)|^p / (δ^{kp−d} ‖u‖^p_{W^{k,p}(B(x0, 2δ))})` on a
//! dyadic grid of radii.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::config::{MorreyVariant, SweepConfig};
use super::sweeps::{run_trials, trial_seed};
use super::{Contract, SweepResult};
use crate::bump::{bump_partial, MultiIndex, SobolevParams};
use crate::error::{Error, Result};
use crate::model::GroundBump;
use crate::quadrature::{integrate_box, GaussLegendre};
use crate::rng::rng;

/// Slack added to the right-hand side of the exact inequality.
pub const EXACT_SLACK: f64 = 1e-9;
/// Radius levels `δ_j = 2^{−j}`, `j = 1..=LEVELS`, of the diagnostic.
pub const LEVELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MorreyTrial {
    pub lhs: f64,
    pub rhs: f64,
}

impl MorreyTrial {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + EXACT_SLACK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorreyReport {
    pub variant: MorreyVariant,
    pub trials: usize,
    /// Exact variant: failing trials. Diagnostic: fine levels whose largest
    /// ratio exceeds ten times the coarse maximum.
    pub violations: usize,
    pub result: SweepResult,
}

fn partial_sum(bumps: &[GroundBump], alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
    bumps
        .iter()
        .try_fold(0.0, |acc, b| Ok(acc + b.height * bump_partial(alpha, &b.center, b.radius, x)?))
}

/// Both sides of the exact inequality for `u = Σ h_j ψ_{r_j}(· − c_j)` on the
/// line.
pub fn morrey_exact_trial(bumps: &[GroundBump], p: f64, x0: f64, x1: f64, delta: f64) -> Result<MorreyTrial> {
    if !(delta > 0.0) {
        return Err(Error::NonpositiveRadius(delta));
    }
    if (x1 - x0).abs() > delta {
        return Err(Error::InvalidParams(format!("|x1 − x0| must not exceed δ = {delta}")));
    }
    if bumps.iter().any(|b| b.center.len() != 1) {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    let zero = MultiIndex::zero(1);
    let lhs = (partial_sum(bumps, &zero, &[x1])? - partial_sum(bumps, &zero, &[x0])?)
        .abs()
        .powf(p);
    let (a, b) = (x0 - 2.0 * delta, x0 + 2.0 * delta);
    let mut breaks = vec![a, b];
    for bump in bumps {
        let c = bump.center[0];
        for e in [-1.0, -0.5, 0.5, 1.0] {
            let t = c + e * bump.radius;
            if t > a && t < b {
                breaks.push(t);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let first = MultiIndex(vec![1]);
    let integral = GaussLegendre::standard().integrate_breaks(&breaks, 4, |x| {
        partial_sum(bumps, &first, &[x]).expect("validated bumps").abs().powf(p)
    });
    Ok(MorreyTrial {
        lhs,
        rhs: (2.0 * delta).powf(p - 1.0) * integral,
    })
}

fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo.ln()..hi.ln()).exp()
}

fn unit_vector(r: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn random_exact_trial(p: f64, seed: u64) -> Result<MorreyTrial> {
    let mut r = rng(seed);
    let m = r.random_range(1..=4);
    let bumps: Vec<GroundBump> = (0..m)
        .map(|_| GroundBump {
            center: vec![r.random_range(-1.0..1.0)],
            radius: log_uniform(&mut r, 0.05, 1.0),
            height: r.random_range(-2.0..2.0),
        })
        .collect();
    let x0 = bumps[0].center[0] + r.random_range(-1.0..1.0) * bumps[0].radius;
    let delta = log_uniform(&mut r, 1e-3, 1.0);
    let x1 = x0 + delta * r.random_range(-1.0..1.0);
    morrey_exact_trial(&bumps, p, x0, x1, delta)
}

/// Panels per axis for the local norm quadrature.
fn local_panels(d: usize) -> usize {
    match d {
        1 => 4,
        2 => 2,
        _ => 1,
    }
}

/// `Σ_α (∫_{B(x0, ρ)} |D^α u|^p)^{1/p}`, raised to the `p`.
fn local_norm_p(bumps: &[GroundBump], params: SobolevParams, x0: &[f64], radius: f64) -> Result<f64> {
    let alphas = MultiIndex::all_up_to(params.d, params.k as usize);
    let lo: Vec<f64> = x0.iter().map(|c| c - radius).collect();
    let hi: Vec<f64> = x0.iter().map(|c| c + radius).collect();
    let r2 = radius * radius;
    let integrand = |x: &[f64], out: &mut [f64]| {
        let inside = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2;
        for (slot, alpha) in out.iter_mut().zip(&alphas) {
            *slot = if inside {
                partial_sum(bumps, alpha, x).expect("validated bumps").abs().powf(params.p)
            } else {
                0.0
            };
        }
    };
    let parts = integrate_box(&lo, &hi, local_panels(params.d), alphas.len(), &integrand);
    Ok(parts.iter().map(|v| v.powf(1.0 / params.p)).sum::<f64>().powf(params.p))
}

/// Ratio at every level for one random bump sum.
fn diagnostic_trial(params: SobolevParams, seed: u64) -> Result<Vec<f64>> {
    let d = params.d;
    let mut r = rng(seed);
    let point = |r: &mut ChaCha8Rng, scale: f64| -> Vec<f64> {
        let v = unit_vector(r, d);
        let t = scale * r.random_range(0.0..1.0f64);
        v.into_iter().map(|x| x * t).collect()
    };
    let mut bumps = vec![GroundBump {
        center: point(&mut r, 0.5),
        radius: r.random_range(0.6..1.0),
        height: r.random_range(0.5..2.0),
    }];
    for _ in 0..r.random_range(0..=2) {
        bumps.push(GroundBump {
            center: point(&mut r, 1.0),
            radius: r.random_range(0.3..1.0),
            height: r.random_range(-2.0..2.0),
        });
    }
    // Start in the transition annulus of the first bump so u is not flat.
    let e = unit_vector(&mut r, d);
    let t = r.random_range(0.55..0.95) * bumps[0].radius;
    let x0: Vec<f64> = bumps[0].center.iter().zip(&e).map(|(c, v)| c + t * v).collect();
    let dir = unit_vector(&mut r, d);
    let frac = r.random_range(0.5..1.0);
    let zero = MultiIndex::zero(d);
    let u0 = partial_sum(&bumps, &zero, &x0)?;
    (1..=LEVELS)
        .map(|j| {
            let delta = 0.5f64.powi(j as i32);
            let x1: Vec<f64> = x0.iter().zip(&dir).map(|(a, v)| a + frac * delta * v).collect();
            let lhs = (partial_sum(&bumps, &zero, &x1)? - u0).abs().powf(params.p);
            let norm_p = local_norm_p(&bumps, params, &x0, 2.0 * delta)?;
            Ok(lhs / (delta.powf(params.excess()) * norm_p))
        })
        .collect()
}

/// Runs the variant selected by the config: exact when `d = k = 1` unless
/// the diagnostic is asked for.
pub fn morrey_check(config: &SweepConfig, seed: u64) -> Result<MorreyReport> {
    let params = config.params;
    let exact_ok = params.d == 1 && params.k == 1;
    let variant = config.sweep.morrey_variant.unwrap_or(if exact_ok {
        MorreyVariant::Exact
    } else {
        MorreyVariant::Diagnostic
    });
    let trials = config.sweep.trials;
    let mut res = SweepResult::new(config, seed);
    let violations = match variant {
        MorreyVariant::Exact => {
            if !exact_ok {
                return Err(Error::UnsupportedExactVariant { d: params.d, k: params.k });
            }
            let outcomes = run_trials(seed, 0, trials, |_, s| random_exact_trial(params.p, s))?;
            let mut violations = 0;
            let mut tightest = 0.0f64;
            for (t, o) in outcomes.iter().enumerate() {
                let s = trial_seed(seed, 0, t);
                res.push(0, t, s, "lhs", o.lhs, None);
                res.push(0, t, s, "rhs", o.rhs, None);
                violations += usize::from(!o.holds());
                if o.rhs > 0.0 {
                    tightest = tightest.max(o.lhs / o.rhs);
                }
            }
            res.contracts.push(Contract::new(
                "morrey-exact",
                "0",
                violations as f64,
                violations == 0,
                format!("largest lhs/rhs over {trials} trials: {tightest}"),
            ));
            violations
        }
        MorreyVariant::Diagnostic => {
            let ratios = run_trials(seed, 0, trials, |_, s| diagnostic_trial(params, s))?;
            let mut level_max = vec![0.0f64; LEVELS];
            for (t, row) in ratios.iter().enumerate() {
                let s = trial_seed(seed, 0, t);
                for (j, &v) in row.iter().enumerate() {
                    res.push(j + 1, t, s, "ratio", v, None);
                    level_max[j] = level_max[j].max(v);
                }
            }
            let (coarse, fine) = level_max.split_at(LEVELS / 2);
            let coarse_max = coarse.iter().copied().fold(0.0, f64::max);
            let fine_max = fine.iter().copied().fold(0.0, f64::max);
            let violations = fine.iter().filter(|&&v| v > 10.0 * coarse_max).count();
            res.contracts.push(Contract::new(
                "morrey-diagnostic",
                "<= 10",
                fine_max / coarse_max,
                violations == 0,
                format!("largest ratio for δ <= 2^-{} over the largest for δ >= 2^-{}", LEVELS / 2 + 1, LEVELS / 2),
            ));
            violations
        }
    };
    Ok(MorreyReport {
        variant,
        trials,
        violations,
        result: res,
    })
}
