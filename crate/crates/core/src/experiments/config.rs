//! Sweep configuration files.
//!
//! A config is TOML with three sections:
//!
//! ```toml
//! id = "norm-1d"
//!
//! [params]
//! k = 1
//! p = 1.25
//! d = 1
//!
//! [distribution]          # optional; defaults to the pure-noise model
//! radius = 1.0
//! density = { kind = "uniform" }
//! noise = { kind = "constant", sigma = 1.0 }
//! ground_truth = []
//!
//! [sweep]
//! kind = "norm-vs-n"
//! n = [64, 128, 256, 512]
//! trials = 20
//! seed = 7
//! ```
//!
//! See [`SweepSection`] for every sweep key and its default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bump::SobolevParams;
use crate::error::{Error, Result};
use crate::model::{Density, DistributionSpec, GroundBump, NoiseProfile};
use crate::rkhs::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    NormVsN,
    DeltaSubset,
    WeightedDeltaSum,
    RiskVsN,
    RiskVsGamma,
    Morrey,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::NormVsN => "norm-vs-n",
            SweepKind::DeltaSubset => "delta-subset",
            SweepKind::WeightedDeltaSum => "weighted-delta-sum",
            SweepKind::RiskVsN => "risk-vs-n",
            SweepKind::RiskVsGamma => "risk-vs-gamma",
            SweepKind::Morrey => "morrey",
        }
    }

    /// Sweeps that fit a law in `n` and therefore need a grid.
    fn needs_grid(self) -> bool {
        matches!(
            self,
            SweepKind::NormVsN | SweepKind::DeltaSubset | SweepKind::WeightedDeltaSum | SweepKind::RiskVsN
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorKind {
    /// Bump interpolant with the configured shrink factor.
    Bump,
    /// Minimum-norm Matérn interpolant, `ν = k − d/2`.
    Kernel,
    /// The Bayes predictor `g`, a control row.
    Bayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MorreyVariant {
    Exact,
    Diagnostic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub k: u32,
    pub p: f64,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSection {
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "uniform")]
    pub density: Density,
    /// Declared lower density bound; defaults to the exact minimum.
    pub density_lower: Option<f64>,
    /// Declared upper density bound; defaults to the exact maximum.
    pub density_upper: Option<f64>,
    #[serde(default)]
    pub ground_truth: Vec<GroundBump>,
    #[serde(default = "unit_noise")]
    pub noise: NoiseProfile,
}

fn one() -> f64 {
    1.0
}

fn uniform() -> Density {
    Density::Uniform
}

fn unit_noise() -> NoiseProfile {
    NoiseProfile::Constant { sigma: 1.0 }
}

impl Default for DistributionSection {
    fn default() -> Self {
        Self {
            radius: 1.0,
            density: Density::Uniform,
            density_lower: None,
            density_upper: None,
            ground_truth: Vec::new(),
            noise: unit_noise(),
        }
    }
}

/// The `[sweep]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepKind,
    /// Sample sizes, strictly increasing, at least 4 levels for sweeps that
    /// fit a law in `n`. `risk-vs-gamma` uses the largest entry.
    #[serde(default)]
    pub n: Vec<usize>,
    /// Trials per level, at least 5.
    pub trials: usize,
    /// Master seed; the CLI `--seed` flag overrides it.
    pub seed: Option<u64>,
    /// Output directory; the CLI `--out` flag overrides it.
    pub output: Option<PathBuf>,
    /// Shrink factors: the `risk-vs-gamma` grid, or a single factor for
    /// `risk-vs-n` with the bump predictor. Default `[1.0]`.
    pub shrink: Option<Vec<f64>>,
    /// Exponent of the weighted sum `Σ|y_i|^p δ_i^{−β}`, in `(0, d/2)`.
    pub beta: Option<f64>,
    #[serde(default = "bump_predictor")]
    pub predictor: PredictorKind,
    /// Matérn lengthscale for the kernel predictor. Default 1.
    #[serde(default = "one")]
    pub lengthscale: f64,
    /// Monte Carlo input draws per risk estimate. Default 20000.
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    /// Slope tolerance; defaults to 0.2 for the `−1/d` law, 0.3 otherwise.
    pub slope_tolerance: Option<f64>,
    /// Plateau contract: risk at the largest `n` over risk at the smallest.
    #[serde(default = "default_plateau")]
    pub plateau_ratio: f64,
    /// Every risk estimate must reach this floor. Default 0.01.
    #[serde(default = "default_floor")]
    pub risk_floor: f64,
    /// Required frequency of `|B| ≥ ρn/8`. Default 0.95.
    #[serde(default = "default_frequency")]
    pub subset_frequency: f64,
    /// Sample size of the frequency check; defaults to the largest `n`.
    pub frequency_n: Option<usize>,
    /// Trials of the frequency check; defaults to `trials`.
    pub frequency_trials: Option<usize>,
    /// Slack below `−pd/(kp − d)` allowed for the risk-vs-γ exponent.
    #[serde(default = "default_gamma_slack")]
    pub gamma_slack: f64,
    /// `exact` (needs d = 1, k = 1) or `diagnostic`; defaults to exact when
    /// available.
    pub morrey_variant: Option<MorreyVariant>,
    /// Also write two-column data files for every fitted curve.
    #[serde(default)]
    pub gnuplot: bool,
}

fn bump_predictor() -> PredictorKind {
    PredictorKind::Bump
}

fn default_mc() -> usize {
    20_000
}

fn default_plateau() -> f64 {
    0.2
}

fn default_floor() -> f64 {
    0.01
}

fn default_frequency() -> f64 {
    0.95
}

fn default_gamma_slack() -> f64 {
    0.75
}

fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    Error::ConfigInvalid {
        field: match line {
            Some(l) => format!("line {l}"),
            None => "config".into(),
        },
        message: e.message().trim().to_string(),
    }
}

fn build_model(params: ParamsSection, dist: &DistributionSection) -> Result<(SobolevParams, DistributionSpec)> {
    let ParamsSection { k, p, d } = params;
    let params = SobolevParams::new(k, p, d).map_err(|e| Error::config("params", e.to_string()))?;
    let mut spec = DistributionSpec::new(d, dist.radius, dist.density, dist.ground_truth.clone(), dist.noise)
        .map_err(|e| Error::config("distribution", e.to_string()))?;
    if dist.density_lower.is_some() || dist.density_upper.is_some() {
        let lo = dist.density_lower.unwrap_or(spec.c_d());
        let hi = dist.density_upper.unwrap_or(spec.big_c_d());
        spec = spec
            .with_density_bounds(lo, hi)
            .map_err(|e| Error::config("distribution.density_lower", e.to_string()))?;
    }
    Ok((params, spec))
}

/// Just the `[params]` and `[distribution]` sections of a config; any other
/// top-level keys (a whole sweep config, say) are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub params: SobolevParams,
    pub spec: DistributionSpec,
}

#[derive(Deserialize)]
struct RawModel {
    params: ParamsSection,
    #[serde(default)]
    distribution: DistributionSection,
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawModel = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        let (params, spec) = build_model(raw.params, &raw.distribution)?;
        Ok(ModelConfig { params, spec })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    id: String,
    params: ParamsSection,
    #[serde(default)]
    distribution: DistributionSection,
    sweep: SweepSection,
}

/// A validated sweep configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub id: String,
    pub params: SobolevParams,
    pub distribution: DistributionSection,
    pub spec: DistributionSpec,
    pub sweep: SweepSection,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        Self::validate(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn validate(raw: RawConfig) -> Result<Self> {
        if raw.id.is_empty() || !raw.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(Error::config("id", "use letters, digits, '-', '_' or '.'"));
        }
        let (params, spec) = build_model(raw.params, &raw.distribution)?;
        let d = params.d;
        let s = &raw.sweep;
        if s.kind.needs_grid() {
            if s.n.len() < 4 {
                return Err(Error::config("sweep.n", "need at least 4 sample sizes"));
            }
            if s.n.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config("sweep.n", "sample sizes must strictly increase"));
            }
        }
        if s.kind == SweepKind::RiskVsGamma && s.n.is_empty() {
            return Err(Error::config("sweep.n", "need a sample size"));
        }
        if s.n.iter().any(|&n| n < 2) {
            return Err(Error::config("sweep.n", "every sample size must be at least 2"));
        }
        if s.trials < 5 {
            return Err(Error::config("sweep.trials", "need at least 5 trials"));
        }
        if let Some(shrink) = &s.shrink {
            if shrink.is_empty() || shrink.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
                return Err(Error::config("sweep.shrink", "shrink factors must lie in (0, 1]"));
            }
        }
        if s.kind == SweepKind::RiskVsGamma && s.shrink.as_ref().is_none_or(|v| v.len() < 2) {
            return Err(Error::config("sweep.shrink", "need at least two shrink factors"));
        }
        let half = d as f64 / 2.0;
        match s.beta {
            Some(beta) if !(beta > 0.0 && beta < half) => {
                return Err(Error::config(
                    "sweep.beta",
                    format!("beta = {beta} must lie in (0, d/2) = (0, {half})"),
                ));
            }
            None if s.kind == SweepKind::WeightedDeltaSum => {
                return Err(Error::config("sweep.beta", "required for weighted-delta-sum"));
            }
            _ => {}
        }
        if s.mc_samples < crate::risk::MIN_SAMPLES {
            return Err(Error::config("sweep.mc_samples", "need at least 100 draws"));
        }
        if !(s.lengthscale > 0.0) {
            return Err(Error::config("sweep.lengthscale", "must be positive"));
        }
        if s.kind == SweepKind::RiskVsN {
            if s.shrink.as_ref().is_some_and(|v| v.len() != 1) {
                return Err(Error::config("sweep.shrink", "risk-vs-n takes a single shrink factor"));
            }
            if s.predictor == PredictorKind::Kernel {
                KernelSpec::for_params(params, s.lengthscale)
                    .map_err(|e| Error::config("sweep.predictor", e.to_string()))?;
            }
        }
        if s.frequency_trials.is_some_and(|t| t == 0) {
            return Err(Error::config("sweep.frequency_trials", "must be positive"));
        }
        Ok(SweepConfig {
            id: raw.id,
            params,
            distribution: raw.distribution,
            spec,
            sweep: raw.sweep,
        })
    }

    pub fn largest_n(&self) -> usize {
        self.sweep.n.last().copied().unwrap_or(0)
    }

    pub fn shrink_grid(&self) -> Vec<f64> {
        self.sweep.shrink.clone().unwrap_or_else(|| vec![1.0])
    }

    pub fn slope_tolerance(&self) -> f64 {
        self.sweep.slope_tolerance.unwrap_or(match self.sweep.kind {
            SweepKind::DeltaSubset => 0.2,
            _ => 0.3,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
id = "mini"
[params]
k = 1
p = 1.25
d = 1
[sweep]
kind = "norm-vs-n"
n = [16, 32, 64, 128]
trials = 5
seed = 1
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = SweepConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.params, SobolevParams::new(1, 1.25, 1).unwrap());
        assert!(cfg.spec.is_uniform_pure_noise());
        assert_eq!(cfg.sweep.mc_samples, 20_000);
        assert_eq!(cfg.slope_tolerance(), 0.3);
        assert_eq!(cfg.shrink_grid(), vec![1.0]);
    }

    fn field_of(text: &str) -> String {
        match SweepConfig::parse(text) {
            Err(Error::ConfigInvalid { field, .. }) => field,
            other => panic!("expected ConfigInvalid, got {other:?}"),
        }
    }

    #[test]
    fn model_config_ignores_the_sweep() {
        let m = ModelConfig::parse(MINIMAL).unwrap();
        assert_eq!(m.params.d, 1);
        let bare = ModelConfig::parse("[params]\nk = 2\np = 2.0\nd = 3\n").unwrap();
        assert!(bare.spec.is_uniform_pure_noise());
        assert!(ModelConfig::parse("[params]\nk = 1\np = 2.0\n").is_err());
    }

    #[test]
    fn invalid_fields_are_named() {
        let beta = MINIMAL
            .replace("norm-vs-n", "weighted-delta-sum")
            .replace("d = 1", "d = 2")
            .replace("p = 1.25", "p = 2.5")
            + "beta = 1.0\n";
        assert_eq!(field_of(&beta), "sweep.beta");
        let missing = MINIMAL.replace("norm-vs-n", "weighted-delta-sum");
        assert_eq!(field_of(&missing), "sweep.beta");
        assert_eq!(field_of(&MINIMAL.replace("trials = 5", "trials = 2")), "sweep.trials");
        assert_eq!(field_of(&MINIMAL.replace("[16, 32, 64, 128]", "[16, 32, 32, 128]")), "sweep.n");
        assert_eq!(field_of(&MINIMAL.replace("[16, 32, 64, 128]", "[16, 32, 64]")), "sweep.n");
        assert_eq!(field_of(&MINIMAL.replace("p = 1.25", "p = 0.5")), "params");
        assert_eq!(field_of(&MINIMAL.replace("trials = 5", "trials = 5\nbogus = 1")), "line 11");
        assert_eq!(field_of(&MINIMAL.replace("id = \"mini\"", "id = \"a b\"")), "id");
    }
}
