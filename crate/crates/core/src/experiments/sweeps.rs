use rayon::prelude::*;

use super::config::{PredictorKind, SweepConfig};
use super::{cached_moduli, Contract, Fit, SweepResult};
use crate::error::{Error, Result};
use crate::geometry::{check_packing, nn_radii};
use crate::interpolant::{min_norm_upper_bound, BumpInterpolant, INTERPOLATION_TOL};
use crate::model::{noise_constants, noisy_separated_subset, sample};
use crate::risk::{excess_risk_mc, excess_risk_semianalytic, RiskEstimate};
use crate::rkhs::{min_norm_interpolant, KernelSpec, RESIDUAL_TOL};
use crate::rng::derive_seed;
use crate::stats::{fit_log_log, median};

pub(super) fn trial_seed(master: u64, n: usize, trial: usize) -> u64 {
    derive_seed(master, &[n as u64, trial as u64])
}

/// Runs `f(trial, seed)` for every trial in parallel, results in trial order.
pub(super) fn run_trials<T, F>(master: u64, n: usize, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(t, trial_seed(master, n, t)))
        .collect()
}

/// Log-log fit through `(x, median(ys))`; `None` unless every median is
/// positive and there are two levels.
fn median_fit(name: &str, x: &str, y: &str, levels: &[(f64, Vec<f64>)]) -> Option<Fit> {
    let points: Vec<(f64, f64)> = levels
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(x, v)| (*x, median(v)))
        .collect();
    if points.len() < 2 || points.len() < levels.len() || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    Some(Fit {
        name: name.into(),
        x: x.into(),
        y: y.into(),
        line: fit_log_log(&xs, &ys),
        points,
    })
}

/// Adds the slope-band contract for `fit`, or a failed one if the fit is
/// undefined.
fn slope_contract(res: &mut SweepResult, name: &str, target: f64, tol: f64, fit: Option<Fit>) {
    match fit {
        Some(fit) => {
            res.contracts.push(Contract::band(name, target, tol, &fit.line));
            res.fits.push(fit);
        }
        None => res.contracts.push(Contract::new(
            name,
            format!("{target} ± {tol}"),
            f64::NAN,
            false,
            "slope undefined: a level has no positive median",
        )),
    }
}

struct NormTrial {
    norm_p: f64,
    bound: f64,
    interp_error: f64,
    packing: usize,
}

/// `‖f_bump‖^p` of the `s = 1` interpolant against `n`, with the per-trial
/// upper bound `C Σ(1 + |y_i|^p δ_i^{d−kp})`.
pub fn sweep_norm_vs_n(config: &SweepConfig, seed: u64) -> Result<SweepResult> {
    let params = config.params;
    params.require_strict_range()?;
    let moduli = cached_moduli(params)?;
    let mut res = SweepResult::new(config, seed);
    let (mut bound_violations, mut packing_violations, mut worst) = (0, 0, 0.0f64);
    let mut levels = Vec::new();
    for &n in &config.sweep.n {
        let trials = run_trials(seed, n, config.sweep.trials, |_, s| {
            let data = sample(&config.spec, n, s)?;
            let radii = nn_radii(&data)?;
            let packing = check_packing(&data, radii.as_slice())?.len();
            let f = BumpInterpolant::build(&data, &radii, 1.0, params)?;
            Ok(NormTrial {
                norm_p: f.sobolev_norm(&moduli)?.powf(params.p),
                bound: min_norm_upper_bound(&data, &radii, &moduli)?,
                interp_error: f.max_interpolation_error(&data),
                packing,
            })
        })?;
        for (t, tr) in trials.iter().enumerate() {
            let s = trial_seed(seed, n, t);
            res.push(n, t, s, "norm_p", tr.norm_p, None);
            res.push(n, t, s, "norm_bound", tr.bound, None);
            res.push(n, t, s, "interp_error", tr.interp_error, None);
            bound_violations += usize::from(!(tr.norm_p <= tr.bound));
            packing_violations += tr.packing;
            worst = worst.max(tr.interp_error);
        }
        levels.push((n as f64, trials.iter().map(|t| t.norm_p).collect()));
    }
    let target = params.k as f64 * params.p / params.d as f64;
    let fit = median_fit("norm_p", "n", "median norm^p", &levels);
    slope_contract(&mut res, "norm-slope", target, config.slope_tolerance(), fit);
    res.contracts.push(Contract::zero("norm-bound", bound_violations, "trials with norm^p above the bound"));
    res.contracts.push(Contract::zero("packing", packing_violations, "pairs closer than (δ_i + δ_j)/2"));
    res.contracts.push(interpolation_contract(worst, INTERPOLATION_TOL));
    Ok(res)
}

fn interpolation_contract(worst: f64, tol: f64) -> Contract {
    Contract::new(
        "interpolation",
        format!("<= {tol:e}"),
        worst,
        worst <= tol,
        "largest |f(x_i) − y_i| over all trials",
    )
}

struct SubsetTrial {
    min_delta: Option<f64>,
    size: usize,
    member_violations: usize,
}

fn subset_trial(config: &SweepConfig, n: usize, seed: u64) -> Result<SubsetTrial> {
    let spec = &config.spec;
    let data = sample(spec, n, seed)?;
    let radii = nn_radii(&data)?;
    let sel = noisy_separated_subset(&data, &radii, spec)?;
    let mut member_violations = 0;
    for &i in &sel.indices {
        let y = data.label(i);
        let e = y - spec.g(data.point(i));
        let ok = radii[i] >= sel.radius_threshold && y.abs() <= sel.label_cap && e * e >= sel.sigma_floor;
        member_violations += usize::from(!ok);
    }
    Ok(SubsetTrial {
        min_delta: sel.indices.iter().map(|&i| radii[i]).reduce(f64::min),
        size: sel.indices.len(),
        member_violations,
    })
}

/// Smallest radius over the noisy separated subset, and the subset size.
pub fn sweep_delta_and_subset(config: &SweepConfig, seed: u64) -> Result<SweepResult> {
    let mut res = SweepResult::new(config, seed);
    let d = config.params.d as f64;
    let mut violations = 0;
    let mut levels = Vec::new();
    for &n in &config.sweep.n {
        let trials = run_trials(seed, n, config.sweep.trials, |_, s| subset_trial(config, n, s))?;
        let mut mins = Vec::new();
        for (t, tr) in trials.iter().enumerate() {
            let s = trial_seed(seed, n, t);
            if let Some(m) = tr.min_delta {
                res.push(n, t, s, "min_delta_subset", m, None);
                mins.push(m);
            }
            res.push(n, t, s, "subset_size", tr.size as f64, None);
            violations += tr.member_violations;
        }
        levels.push((n as f64, mins));
    }
    let fit = median_fit("min_delta_subset", "n", "median min δ over the subset", &levels);
    slope_contract(&mut res, "min-delta-slope", -1.0 / d, config.slope_tolerance(), fit);
    res.contracts.push(Contract::zero(
        "subset-membership",
        violations,
        "members failing the radius, label or noise condition",
    ));

    let rho = noise_constants(&config.spec).rho;
    let n_f = config.sweep.frequency_n.unwrap_or(config.largest_n());
    let trials_f = config.sweep.frequency_trials.unwrap_or(config.sweep.trials);
    let sizes = run_trials(seed, n_f, trials_f, |_, s| subset_trial(config, n_f, s).map(|t| t.size))?;
    let need = rho * n_f as f64 / 8.0;
    let hits = sizes.iter().filter(|&&s| s as f64 >= need).count();
    let freq = hits as f64 / trials_f as f64;
    let want = config.sweep.subset_frequency;
    res.contracts.push(Contract::new(
        "subset-frequency",
        format!(">= {want}"),
        freq,
        freq >= want,
        format!("{hits} of {trials_f} trials at n = {n_f} reach ρn/8 = {need}"),
    ));
    Ok(res)
}

/// `Σ_i |y_i|^p δ_i^{−β}` against `n`.
pub fn sweep_weighted_delta_sum(config: &SweepConfig, seed: u64) -> Result<SweepResult> {
    let params = config.params;
    let limit = params.d as f64 / 2.0;
    let beta = config
        .sweep
        .beta
        .ok_or_else(|| Error::config("sweep.beta", "required for weighted-delta-sum"))?;
    if !(beta > 0.0 && beta < limit) {
        return Err(Error::InvalidBeta { beta, limit });
    }
    let mut res = SweepResult::new(config, seed);
    let mut levels = Vec::new();
    for &n in &config.sweep.n {
        let sums = run_trials(seed, n, config.sweep.trials, |_, s| {
            let data = sample(&config.spec, n, s)?;
            let radii = nn_radii(&data)?;
            Ok(data
                .labels()
                .iter()
                .zip(radii.as_slice())
                .map(|(y, delta)| y.abs().powf(params.p) * delta.powf(-beta))
                .sum::<f64>())
        })?;
        for (t, &v) in sums.iter().enumerate() {
            res.push(n, t, trial_seed(seed, n, t), "weighted_delta_sum", v, None);
        }
        levels.push((n as f64, sums));
    }
    let fit = median_fit("weighted_delta_sum", "n", "median weighted sum", &levels);
    slope_contract(
        &mut res,
        "weighted-sum-slope",
        1.0 + beta / params.d as f64,
        config.slope_tolerance(),
        fit,
    );
    Ok(res)
}

struct RiskTrial {
    mc: RiskEstimate,
    exact: Option<f64>,
    interp_error: f64,
}

fn mc_seed(master: u64, n: usize, trial: usize, tag: u64) -> u64 {
    derive_seed(master, &[n as u64, trial as u64, tag])
}

/// Exact risk when the semi-analytic formula applies, `None` when it does not.
fn semianalytic(f: &BumpInterpolant, config: &SweepConfig) -> Result<Option<f64>> {
    match excess_risk_semianalytic(f, &config.spec) {
        Ok(r) => Ok(Some(r.mean)),
        Err(Error::UnsupportedSpec(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn risk_trial(config: &SweepConfig, master: u64, n: usize, trial: usize, seed: u64) -> Result<RiskTrial> {
    let spec = &config.spec;
    let sw = &config.sweep;
    let data = sample(spec, n, seed)?;
    let mseed = mc_seed(master, n, trial, 1);
    match sw.predictor {
        PredictorKind::Bump => {
            let radii = nn_radii(&data)?;
            let f = BumpInterpolant::build(&data, &radii, config.shrink_grid()[0], config.params)?;
            Ok(RiskTrial {
                mc: excess_risk_mc(&|x: &[f64]| f.eval(x), spec, sw.mc_samples, mseed)?,
                exact: semianalytic(&f, config)?,
                interp_error: f.max_interpolation_error(&data),
            })
        }
        PredictorKind::Kernel => {
            let kspec = KernelSpec::for_params(config.params, sw.lengthscale)?;
            let f = min_norm_interpolant(&data, &kspec)?;
            Ok(RiskTrial {
                mc: excess_risk_mc(&|x: &[f64]| f.eval(x), spec, sw.mc_samples, mseed)?,
                exact: None,
                interp_error: f.residual(),
            })
        }
        PredictorKind::Bayes => Ok(RiskTrial {
            mc: excess_risk_mc(&|x: &[f64]| spec.g(x), spec, sw.mc_samples, mseed)?,
            exact: Some(0.0),
            interp_error: 0.0,
        }),
    }
}

/// Excess risk of an interpolating family against `n`.
pub fn sweep_risk_vs_n(config: &SweepConfig, seed: u64) -> Result<SweepResult> {
    let sw = &config.sweep;
    let mut res = SweepResult::new(config, seed);
    let mut levels = Vec::new();
    let (mut floor_min, mut worst_interp) = (f64::INFINITY, 0.0f64);
    let mut worst_z: Option<f64> = Some(0.0);
    for &n in &sw.n {
        let trials = run_trials(seed, n, sw.trials, |t, s| risk_trial(config, seed, n, t, s))?;
        let (mut diff, mut var) = (0.0, 0.0);
        for (t, tr) in trials.iter().enumerate() {
            let s = trial_seed(seed, n, t);
            res.push(n, t, s, "risk_mc", tr.mc.mean, Some(tr.mc.stderr));
            if let Some(e) = tr.exact {
                res.push(n, t, s, "risk_exact", e, None);
            }
            res.push(n, t, s, "interp_error", tr.interp_error, None);
            floor_min = floor_min.min(tr.mc.mean);
            worst_interp = worst_interp.max(tr.interp_error);
            match (tr.exact, worst_z.as_mut()) {
                (Some(e), Some(_)) => {
                    diff += tr.mc.mean - e;
                    var += tr.mc.stderr * tr.mc.stderr;
                }
                _ => worst_z = None,
            }
        }
        if let Some(z) = worst_z.as_mut() {
            let k = trials.len() as f64;
            let (d, se) = ((diff / k).abs(), var.sqrt() / k);
            let score = if se > 0.0 {
                d / se
            } else if d <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            *z = z.max(score);
        }
        levels.push((n as f64, trials.iter().map(|t| t.mc.mean).collect::<Vec<_>>()));
    }
    if let Some(fit) = median_fit("risk", "n", "median excess risk", &levels) {
        res.fits.push(fit);
    }
    if sw.predictor == PredictorKind::Bayes {
        res.contracts.push(Contract::new(
            "benign-control",
            "not applicable",
            floor_min.max(0.0),
            true,
            "the Bayes predictor does not interpolate noisy labels; plateau contracts do not apply",
        ));
        return Ok(res);
    }
    let floor = sw.risk_floor;
    res.contracts.push(Contract::new(
        "risk-floor",
        format!(">= {floor}"),
        floor_min,
        floor_min >= floor,
        "smallest excess-risk estimate over all trials",
    ));
    let first = median(&levels[0].1);
    let last = median(&levels[levels.len() - 1].1);
    let ratio = last / first;
    res.contracts.push(Contract::new(
        "plateau",
        format!(">= {}", sw.plateau_ratio),
        ratio,
        ratio >= sw.plateau_ratio,
        format!("median risk {last} at n = {} over {first} at n = {}", config.largest_n(), sw.n[0]),
    ));
    if let Some(z) = worst_z {
        res.contracts.push(Contract::new(
            "oracle-agreement",
            "<= 3",
            z,
            z <= 3.0,
            "largest |mean(MC) − mean(exact)| per n in pooled standard errors",
        ));
    }
    let tol = match sw.predictor {
        PredictorKind::Kernel => RESIDUAL_TOL,
        _ => INTERPOLATION_TOL,
    };
    res.contracts.push(interpolation_contract(worst_interp, tol));
    Ok(res)
}

struct GammaPoint {
    gamma: f64,
    risk: RiskEstimate,
    interp_error: f64,
}

fn shrink_label(metric: &str, s: f64) -> String {
    format!("{metric}:s={s}")
}

/// Risk against the certified norm-optimality factor `γ` as the bumps
/// shrink, at the largest configured `n`.
pub fn sweep_risk_vs_gamma(config: &SweepConfig, seed: u64) -> Result<SweepResult> {
    let params = config.params;
    let moduli = cached_moduli(params)?;
    let grid = config.shrink_grid();
    let n = config.largest_n();
    let sw = &config.sweep;
    let trials = run_trials(seed, n, sw.trials, |t, s| {
        let data = sample(&config.spec, n, s)?;
        let radii = nn_radii(&data)?;
        grid.iter()
            .enumerate()
            .map(|(j, &shrink)| {
                let f = BumpInterpolant::build(&data, &radii, shrink, params)?;
                let gamma = f.gamma_report(&data, &radii, &moduli)?.gamma_lower_bound;
                let risk = match excess_risk_semianalytic(&f, &config.spec) {
                    Ok(r) => r,
                    Err(Error::UnsupportedSpec(_)) => excess_risk_mc(
                        &|x: &[f64]| f.eval(x),
                        &config.spec,
                        sw.mc_samples,
                        mc_seed(seed, n, t, 2 + j as u64),
                    )?,
                    Err(e) => return Err(e),
                };
                Ok(GammaPoint {
                    gamma,
                    risk,
                    interp_error: f.max_interpolation_error(&data),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut res = SweepResult::new(config, seed);
    let mut worst = 0.0f64;
    let mut unit_gamma_off = 0;
    for (t, points) in trials.iter().enumerate() {
        let s = trial_seed(seed, n, t);
        for (&shrink, pt) in grid.iter().zip(points) {
            res.push(n, t, s, &shrink_label("gamma_lower_bound", shrink), pt.gamma, None);
            let se = (pt.risk.samples > 0).then_some(pt.risk.stderr);
            res.push(n, t, s, &shrink_label("risk", shrink), pt.risk.mean, se);
            worst = worst.max(pt.interp_error);
            unit_gamma_off += usize::from(shrink == 1.0 && pt.gamma != 1.0);
        }
    }
    let column = |j: usize, f: fn(&GammaPoint) -> f64| -> Vec<f64> { trials.iter().map(|pts| f(&pts[j])).collect() };
    let points: Vec<(f64, f64)> = (0..grid.len())
        .map(|j| (median(&column(j, |p| p.gamma)), median(&column(j, |p| p.risk.mean))))
        .collect();
    let reference = params.gamma_exponent();
    let bound = reference - sw.gamma_slack;
    let valid = points.iter().all(|&(g, r)| g > 0.0 && r > 0.0);
    let distinct = points.iter().any(|&(g, _)| g != points[0].0);
    if valid && distinct {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        let line = fit_log_log(&xs, &ys);
        res.contracts.push(Contract::new(
            "gamma-exponent",
            format!(">= {bound}"),
            line.slope,
            line.slope >= bound,
            format!("reference exponent {reference}, slope stderr {}", line.slope_stderr),
        ));
        res.fits.push(Fit {
            name: "risk_vs_gamma".into(),
            x: "median γ lower bound".into(),
            y: "median excess risk".into(),
            points,
            line,
        });
    } else {
        res.contracts.push(Contract::new(
            "gamma-exponent",
            format!(">= {bound}"),
            f64::NAN,
            false,
            "exponent undefined: non-positive medians or a single γ level",
        ));
    }
    res.contracts.push(Contract::zero("unit-shrink-gamma", unit_gamma_off, "s = 1 rows whose γ bound is not exactly 1"));
    res.contracts.push(interpolation_contract(worst, INTERPOLATION_TOL));
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{execute, morrey_check, MorreyVariant, SweepKind};

    fn cfg(body: &str) -> SweepConfig {
        SweepConfig::parse(body).unwrap()
    }

    fn small(kind: &str, k: u32, p: f64, d: usize, extra: &str) -> SweepConfig {
        cfg(&format!(
            "id = \"t\"\n[params]\nk = {k}\np = {p}\nd = {d}\n[sweep]\nkind = \"{kind}\"\nn = [32, 64, 128, 256]\ntrials = 5\nseed = 1\nmc_samples = 1000\n{extra}"
        ))
    }

    #[test]
    fn norm_sweep_needs_the_strict_range() {
        // k = 1 lies above 1.5 d/p = 0.75.
        let c = small("norm-vs-n", 1, 2.0, 1, "");
        assert!(matches!(sweep_norm_vs_n(&c, 1), Err(Error::InvalidRange { .. })));
    }

    #[test]
    fn zero_labels_give_zero_norm() {
        let mut c = small("norm-vs-n", 1, 1.25, 1, "");
        c.spec = crate::model::DistributionSpec::new(
            1,
            1.0,
            crate::model::Density::Uniform,
            vec![],
            crate::model::NoiseProfile::Constant { sigma: 1.0 },
        )
        .unwrap();
        let data = sample(&c.spec, 64, 3).unwrap().with_labels(vec![0.0; 64]).unwrap();
        let radii = nn_radii(&data).unwrap();
        let f = BumpInterpolant::build(&data, &radii, 1.0, c.params).unwrap();
        assert_eq!(f.sobolev_norm(&cached_moduli(c.params).unwrap()).unwrap(), 0.0);
        // A zero median makes the slope undefined, which fails the contract.
        let res = sweep_norm_vs_n(&c, 1).unwrap();
        assert!(res.contract("norm-slope").is_some());
    }

    #[test]
    fn beta_outside_range_is_rejected_by_the_sweep() {
        let mut c = small("weighted-delta-sum", 1, 2.5, 2, "beta = 0.5\n");
        c.sweep.beta = Some(1.0);
        assert!(matches!(
            sweep_weighted_delta_sum(&c, 1),
            Err(Error::InvalidBeta { beta, limit }) if beta == 1.0 && limit == 1.0
        ));
    }

    #[test]
    fn rows_are_reproducible_and_seeded() {
        let c = small("delta-subset", 1, 2.5, 2, "");
        let a = execute(&c, 5).unwrap();
        let b = execute(&c, 5).unwrap();
        assert_eq!(a, b);
        let other = execute(&c, 6).unwrap();
        assert_ne!(a.rows, other.rows);
        assert_eq!(a.rows[0].seed, trial_seed(5, 32, 0));
        let first = sample(&c.spec, 32, a.rows[0].seed).unwrap();
        let sel = noisy_separated_subset(&first, &nn_radii(&first).unwrap(), &c.spec).unwrap();
        let size = a.rows.iter().find(|r| r.metric == "subset_size").unwrap().value;
        assert_eq!(size, sel.indices.len() as f64);
    }

    #[test]
    fn bayes_control_is_benign() {
        let c = small("risk-vs-n", 1, 1.25, 1, "predictor = \"bayes\"\n");
        let res = sweep_risk_vs_n(&c, 1).unwrap();
        assert!(res.values("risk_mc").iter().all(|&v| v == 0.0));
        assert_eq!(res.contracts.len(), 1);
        assert_eq!(res.contracts[0].name, "benign-control");
        assert!(res.passed());
    }

    #[test]
    fn bump_risk_matches_its_oracle() {
        let c = small("risk-vs-n", 1, 1.25, 1, "");
        let res = sweep_risk_vs_n(&c, 3).unwrap();
        assert_eq!(res.values("risk_exact").len(), 20);
        assert!(res.contract("oracle-agreement").unwrap().passed);
        assert!(res.contract("interpolation").unwrap().passed);
    }

    #[test]
    fn unit_shrink_has_unit_gamma() {
        let c = cfg("id = \"g\"\n[params]\nk = 1\np = 1.25\nd = 1\n[sweep]\nkind = \"risk-vs-gamma\"\nn = [200]\ntrials = 5\nseed = 2\nshrink = [1.0, 0.5]\n");
        let res = sweep_risk_vs_gamma(&c, 2).unwrap();
        let unit = res.values("gamma_lower_bound:s=1");
        assert_eq!(unit, vec![1.0; 5]);
        assert!(res.values("gamma_lower_bound:s=0.5").iter().all(|&g| g > 1.0));
        assert!(res.contract("gamma-exponent").unwrap().passed);
    }

    #[test]
    fn exact_oscillation_needs_the_line() {
        let mut c = small("morrey", 1, 2.5, 2, "");
        c.sweep.morrey_variant = Some(MorreyVariant::Exact);
        assert!(matches!(morrey_check(&c, 1), Err(Error::UnsupportedExactVariant { d: 2, k: 1 })));
        c.sweep.morrey_variant = None;
        let r = morrey_check(&c, 1).unwrap();
        assert_eq!((r.variant, r.result.kind), (MorreyVariant::Diagnostic, SweepKind::Morrey));
        assert_eq!(r.violations, 0);
    }
}
