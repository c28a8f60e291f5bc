//! Config-driven sweeps over sample size, shrink factor and ball radius.
//!
//! Every sweep is a pure function of its [`SweepConfig`] and master seed.
//! Trial `t` at sample size `n` draws its data from
//! `derive_seed(master, [n, t])`, trials run in parallel and are collected
//! in order, so outputs do not depend on the thread count.

mod config;
mod morrey;
mod output;
mod sweeps;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

pub use config::{
    DistributionSection, ModelConfig, MorreyVariant, ParamsSection, PredictorKind, SweepConfig, SweepKind, SweepSection,
};
pub use morrey::{morrey_check, morrey_exact_trial, MorreyReport, MorreyTrial};
pub use output::{rows_csv, rows_json_lines, summary_json, OutputFormat, RunOutcome, CSV_HEADER};
pub use sweeps::{
    sweep_delta_and_subset, sweep_norm_vs_n, sweep_risk_vs_gamma, sweep_risk_vs_n, sweep_weighted_delta_sum,
};

use crate::bump::{reference_moduli, ReferenceModuli, SobolevParams};
use crate::error::{Error, Result};
use crate::stats::LineFit;

/// One measurement. `n` is the sample size, or the radius level for the
/// oscillation diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub sweep: &'static str,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

/// A pass/fail check with its target and what was observed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contract {
    pub name: String,
    pub target: String,
    pub observed: f64,
    pub passed: bool,
    pub detail: String,
}

impl Contract {
    fn new(name: &str, target: impl Into<String>, observed: f64, passed: bool, detail: impl Into<String>) -> Self {
        Contract {
            name: name.into(),
            target: target.into(),
            observed,
            passed,
            detail: detail.into(),
        }
    }

    /// `observed` must equal zero.
    fn zero(name: &str, observed: usize, detail: impl Into<String>) -> Self {
        Self::new(name, "0", observed as f64, observed == 0, detail)
    }

    fn band(name: &str, target: f64, tol: f64, fit: &LineFit) -> Self {
        Self::new(
            name,
            format!("{target} ± {tol}"),
            fit.slope,
            (fit.slope - target).abs() <= tol,
            format!("slope stderr {}", fit.slope_stderr),
        )
    }
}

/// A log-log line fitted through per-level medians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fit {
    pub name: String,
    pub x: String,
    pub y: String,
    pub points: Vec<(f64, f64)>,
    pub line: LineFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub id: String,
    pub kind: SweepKind,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub contracts: Vec<Contract>,
    pub fits: Vec<Fit>,
}

impl SweepResult {
    fn new(config: &SweepConfig, seed: u64) -> Self {
        SweepResult {
            id: config.id.clone(),
            kind: config.sweep.kind,
            seed,
            rows: Vec::new(),
            contracts: Vec::new(),
            fits: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.contracts.iter().all(|c| c.passed)
    }

    pub fn contract(&self, name: &str) -> Option<&Contract> {
        self.contracts.iter().find(|c| c.name == name)
    }

    pub fn fit(&self, name: &str) -> Option<&Fit> {
        self.fits.iter().find(|f| f.name == name)
    }

    /// Values of one metric, in row order.
    pub fn values(&self, metric: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.metric == metric).map(|r| r.value).collect()
    }

    fn push(&mut self, n: usize, trial: usize, seed: u64, metric: &str, value: f64, stderr: Option<f64>) {
        self.rows.push(Row {
            sweep: self.kind.name(),
            n,
            trial,
            seed,
            metric: metric.to_string(),
            value,
            stderr,
        });
    }
}

/// Reference moduli, computed once per parameter triple per process.
pub fn cached_moduli(params: SobolevParams) -> Result<Arc<ReferenceModuli>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u64, usize), Arc<ReferenceModuli>>>> = OnceLock::new();
    let key = (params.k, params.p.to_bits(), params.d);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(m) = cache.lock().expect("moduli cache").get(&key) {
        return Ok(m.clone());
    }
    let m = Arc::new(reference_moduli(params)?);
    cache.lock().expect("moduli cache").insert(key, m.clone());
    Ok(m)
}

/// Runs the sweep named by `config` with the given master seed.
pub fn execute(config: &SweepConfig, seed: u64) -> Result<SweepResult> {
    match config.sweep.kind {
        SweepKind::NormVsN => sweep_norm_vs_n(config, seed),
        SweepKind::DeltaSubset => sweep_delta_and_subset(config, seed),
        SweepKind::WeightedDeltaSum => sweep_weighted_delta_sum(config, seed),
        SweepKind::RiskVsN => sweep_risk_vs_n(config, seed),
        SweepKind::RiskVsGamma => sweep_risk_vs_gamma(config, seed),
        SweepKind::Morrey => morrey_check(config, seed).map(|r| r.result),
    }
}

/// Command-line overrides for [`run`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

/// Loads a config file, runs its sweep and writes the results.
pub fn run(path: impl AsRef<Path>, options: &RunOptions) -> Result<RunOutcome> {
    let config = SweepConfig::load(path)?;
    run_config(&config, options)
}

pub fn run_config(config: &SweepConfig, options: &RunOptions) -> Result<RunOutcome> {
    let seed = options
        .seed
        .or(config.sweep.seed)
        .ok_or_else(|| Error::config("sweep.seed", "no seed in the config and none given on the command line"))?;
    let out = options
        .out
        .clone()
        .or_else(|| config.sweep.output.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let result = execute(config, seed)?;
    output::write_all(result, &out, options.format, config.sweep.gnuplot)
}
