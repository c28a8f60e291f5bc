//! Heteroskedastic Gaussian data model on a ball domain.
//!
//! Inputs `x` are drawn from a density on `B(0, R)` and labels are
//! `y = g(x) + ε` with `ε ~ N(0, σ(x)²)`. Under squared loss the conditional
//! loss is `σ(x)² + (ŷ − g(x))²` and the regret is `(ŷ − g(x))²`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bump::{bump_generic, unit_ball_volume};
use crate::dataset::{sq_dist, Dataset};
use crate::error::{Error, Result};
use crate::geometry::NnRadii;
use crate::quadrature::GaussLegendre;
use crate::rng;
use crate::stats::Moments;

/// Proposals allowed per accepted point before the sampler gives up.
pub const REJECTION_BUDGET_PER_POINT: u64 = 1000;

/// Conservative mislabel probability quoted for the Gaussian model.
pub const QUOTED_RHO: f64 = 0.1;

/// Input density on the domain ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Density {
    Uniform,
    /// Proportional to `1 + tilt·(‖x‖/R)²`, `tilt > −1`.
    RadialQuadratic { tilt: f64 },
}

/// One term `height · ψ_radius(x − center)` of a bump-sum ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundBump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub height: f64,
}

/// Noise standard deviation profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseProfile {
    Constant { sigma: f64 },
    /// `σ(x)² = a + b‖x‖²`.
    Radial { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    dim: usize,
    radius: f64,
    density: Density,
    c_d: f64,
    big_c_d: f64,
    ground_truth: Vec<GroundBump>,
    noise: NoiseProfile,
    sigma_min: f64,
    sigma_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConstants {
    /// `σ_min²`, the label-noise margin.
    pub sigma_floor: f64,
    /// `2Φ(−1)`, a lower bound on `P(ε² ≥ σ_min² | x)`.
    pub rho: f64,
    /// The looser constant 0.1 quoted for the same bound.
    pub quoted_rho: f64,
    /// Sub-Gaussian scale `√2 (sup|g| + σ_max)`.
    pub c_y: f64,
}

impl NoiseConstants {
    /// `C_y √(log(4/ρ))`.
    pub fn label_cap(&self) -> f64 {
        self.c_y * (4.0 / self.rho).ln().sqrt()
    }
}

/// Noisy, well-separated subset of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSelection {
    pub indices: Vec<usize>,
    /// `δ_i ≥ radius_threshold`.
    pub z: Vec<bool>,
    /// `|y_i| ≤ label_cap`.
    pub y: Vec<bool>,
    /// `(y_i − g(x_i))² ≥ σ_min²`.
    pub w: Vec<bool>,
    /// `(2 C_1 n)^{−1/d}` with `C_1 = C_D vol(B(0, 1))`.
    pub radius_threshold: f64,
    pub label_cap: f64,
    pub sigma_floor: f64,
}

/// Monte Carlo check of the noise constants at one probe point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProbe {
    pub x: Vec<f64>,
    /// Empirical `P((y − g(x))² ≥ σ_min² | x)` and its standard error.
    pub exceed_rate: f64,
    pub exceed_stderr: f64,
    /// `(t, empirical P(|y| ≥ t | x), stderr, 2 exp(−t²/C_y²))`.
    pub tails: Vec<(f64, f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCheck {
    pub constants: NoiseConstants,
    pub probes: Vec<NoiseProbe>,
    /// Every probe has `exceed_rate ≥ ρ − 3·stderr` and every tail rate is
    /// at most its bound plus `3·stderr`.
    pub passed: bool,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl From<Moments> for McEstimate {
    fn from(m: Moments) -> Self {
        McEstimate {
            mean: m.mean,
            stderr: m.stderr(),
            samples: m.count,
        }
    }
}

impl DistributionSpec {
    /// Validates the pieces and derives the density and noise bounds.
    pub fn new(
        dim: usize,
        radius: f64,
        density: Density,
        ground_truth: Vec<GroundBump>,
        noise: NoiseProfile,
    ) -> Result<Self> {
        if dim == 0 || dim > crate::bump::MAX_DIM {
            return Err(Error::InvalidParams(format!("d = {dim} unsupported")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::NonpositiveRadius(radius));
        }
        if let Density::RadialQuadratic { tilt } = density {
            if !(tilt > -1.0 && tilt.is_finite()) {
                return Err(Error::InvalidParams(format!("density tilt {tilt} must exceed -1")));
            }
        }
        for (i, b) in ground_truth.iter().enumerate() {
            if b.center.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: b.center.len(),
                });
            }
            if !(b.radius > 0.0) {
                return Err(Error::NonpositiveRadius(b.radius));
            }
            let reach = sq_dist(&b.center, &vec![0.0; dim]).sqrt() + b.radius;
            if reach > radius {
                return Err(Error::InvalidParams(format!(
                    "ground-truth bump {i} leaves the domain (reach {reach} > {radius})"
                )));
            }
        }
        let r2_max = radius * radius;
        let (var_lo, var_hi) = match noise {
            NoiseProfile::Constant { sigma } => (sigma * sigma, sigma * sigma),
            NoiseProfile::Radial { a, b } => {
                let (u, v) = (a, a + b * r2_max);
                (u.min(v), u.max(v))
            }
        };
        if !(var_lo > 0.0 && var_hi.is_finite()) {
            return Err(Error::InvalidParams(
                "noise variance must be positive on the whole domain".into(),
            ));
        }
        let mut spec = Self {
            dim,
            radius,
            density,
            c_d: 0.0,
            big_c_d: 0.0,
            ground_truth,
            noise,
            sigma_min: var_lo.sqrt(),
            sigma_max: var_hi.sqrt(),
        };
        let (at0, at_r) = (spec.density_at_radius(0.0), spec.density_at_radius(radius));
        spec.c_d = at0.min(at_r);
        spec.big_c_d = at0.max(at_r);
        let total = spec.density_integral();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParams(format!("density integrates to {total}")));
        }
        Ok(spec)
    }

    /// Uniform inputs on the unit ball, `g = 0`, `σ = 1`.
    pub fn pure_noise(dim: usize) -> Result<Self> {
        Self::new(dim, 1.0, Density::Uniform, Vec::new(), NoiseProfile::Constant { sigma: 1.0 })
    }

    /// Overrides the declared density bounds `c_D ≤ p_x ≤ C_D`. The lower
    /// bound must hold; a loose upper bound only slows the sampler.
    pub fn with_density_bounds(mut self, c_d: f64, big_c_d: f64) -> Result<Self> {
        if !(c_d > 0.0 && c_d <= big_c_d) {
            return Err(Error::InvalidParams(format!(
                "density bounds need 0 < c_D <= C_D, got {c_d}, {big_c_d}"
            )));
        }
        if c_d > self.c_d * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "c_D = {c_d} exceeds the density minimum {}",
                self.c_d
            )));
        }
        self.c_d = c_d;
        self.big_c_d = big_c_d;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn density_kind(&self) -> Density {
        self.density
    }

    pub fn ground_truth(&self) -> &[GroundBump] {
        &self.ground_truth
    }

    pub fn noise(&self) -> NoiseProfile {
        self.noise
    }

    /// Declared lower density bound `c_D`.
    pub fn c_d(&self) -> f64 {
        self.c_d
    }

    /// Declared upper density bound `C_D`.
    pub fn big_c_d(&self) -> f64 {
        self.big_c_d
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Lebesgue measure of the domain.
    pub fn domain_volume(&self) -> f64 {
        unit_ball_volume(self.dim) * self.radius.powi(self.dim as i32)
    }

    /// `g = 0` and uniform inputs.
    pub fn is_uniform_pure_noise(&self) -> bool {
        self.density == Density::Uniform && self.ground_truth.iter().all(|b| b.height == 0.0)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().map(|v| v * v).sum::<f64>() <= self.radius * self.radius
    }

    fn require_inside(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !self.contains(x) {
            return Err(Error::OutOfDomain {
                radius: self.radius,
            });
        }
        Ok(())
    }

    fn density_at_radius(&self, r: f64) -> f64 {
        let vol = self.domain_volume();
        match self.density {
            Density::Uniform => 1.0 / vol,
            Density::RadialQuadratic { tilt } => {
                let d = self.dim as f64;
                let z = vol * (1.0 + tilt * d / (d + 2.0));
                (1.0 + tilt * (r / self.radius).powi(2)) / z
            }
        }
    }

    /// `p_x(x)` (zero outside the domain).
    pub fn density(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        self.density_at_radius(sq_dist(x, &vec![0.0; self.dim]).sqrt())
    }

    /// `∫ p_x` by radial Gauss–Legendre quadrature.
    pub fn density_integral(&self) -> f64 {
        let d = self.dim;
        let surface = d as f64 * unit_ball_volume(d);
        GaussLegendre::standard().integrate(0.0, self.radius, 8, |r| {
            surface * r.powi(d as i32 - 1) * self.density_at_radius(r)
        })
    }

    /// `g(x)`.
    pub fn g(&self, x: &[f64]) -> f64 {
        self.ground_truth
            .iter()
            .map(|b| b.height * bump_generic(&b.center, b.radius, x))
            .sum()
    }

    /// An upper bound on `sup|g|`: the largest height when the bump supports
    /// are pairwise disjoint, the total height otherwise.
    pub fn sup_g(&self) -> f64 {
        let bumps = &self.ground_truth;
        let disjoint = bumps.iter().enumerate().all(|(i, a)| {
            bumps[i + 1..]
                .iter()
                .all(|b| sq_dist(&a.center, &b.center).sqrt() >= a.radius + b.radius)
        });
        let heights = bumps.iter().map(|b| b.height.abs());
        if disjoint {
            heights.fold(0.0, f64::max)
        } else {
            heights.sum()
        }
    }

    /// `σ(x)²`.
    pub fn sigma2(&self, x: &[f64]) -> f64 {
        match self.noise {
            NoiseProfile::Constant { sigma } => sigma * sigma,
            NoiseProfile::Radial { a, b } => a + b * x.iter().map(|v| v * v).sum::<f64>(),
        }
    }

    /// A uniform point of `B(center, radius)` written into `out`.
    pub(crate) fn uniform_in_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64, out: &mut [f64]) {
        let d = center.len();
        if d == 1 {
            out[0] = center[0] + radius * rng.random_range(-1.0..=1.0);
            return;
        }
        let mut norm2 = 0.0;
        while norm2 == 0.0 {
            norm2 = 0.0;
            for o in out.iter_mut() {
                *o = rng.sample(StandardNormal);
                norm2 += *o * *o;
            }
        }
        let u: f64 = rng.random();
        let scale = radius * u.powf(1.0 / d as f64) / norm2.sqrt();
        for (o, c) in out.iter_mut().zip(center) {
            *o = c + *o * scale;
        }
    }

    /// One input draw from `p_x`, by rejection against the uniform envelope
    /// `C_D`. Returns the number of proposals used.
    pub(crate) fn draw_x(&self, rng: &mut ChaCha8Rng, budget: u64, out: &mut [f64]) -> Result<u64> {
        let origin = vec![0.0; self.dim];
        let envelope = self.big_c_d;
        for attempt in 1..=budget {
            Self::uniform_in_ball(rng, &origin, self.radius, out);
            if self.density == Density::Uniform {
                return Ok(attempt);
            }
            let u: f64 = rng.random();
            if u * envelope < self.density(out) {
                return Ok(attempt);
            }
        }
        Err(Error::RejectionBudgetExceeded { attempts: budget })
    }

    /// `m` input draws, row-major.
    pub(crate) fn draw_inputs(&self, rng: &mut ChaCha8Rng, m: usize) -> Result<Vec<f64>> {
        let mut coords = vec![0.0; m * self.dim];
        let total = REJECTION_BUDGET_PER_POINT * m as u64;
        let mut used = 0;
        for row in coords.chunks_mut(self.dim) {
            used += self
                .draw_x(rng, total - used, row)
                .map_err(|_| Error::RejectionBudgetExceeded { attempts: total })?;
        }
        Ok(coords)
    }

    /// A label `g(x) + σ(x) ζ`, `ζ ~ N(0, 1)`.
    pub(crate) fn draw_label(&self, rng: &mut ChaCha8Rng, x: &[f64]) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.g(x) + self.sigma2(x).sqrt() * z
    }
}

/// `n` i.i.d. pairs from the model, deterministic in `seed`.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let mut r = rng::rng(seed);
    let coords = spec.draw_inputs(&mut r, n)?;
    let labels = coords.chunks(spec.dim).map(|x| spec.draw_label(&mut r, x)).collect();
    Dataset::new(spec.dim, coords, labels)
}

/// `E[(ŷ − y)² | x] = σ(x)² + (ŷ − g(x))²`.
pub fn conditional_loss(spec: &DistributionSpec, y_hat: f64, x: &[f64]) -> Result<f64> {
    spec.require_inside(x)?;
    let e = y_hat - spec.g(x);
    Ok(spec.sigma2(x) + e * e)
}

/// `(ŷ − g(x))²`, the conditional loss above its infimum `σ(x)²`.
pub fn regret(spec: &DistributionSpec, y_hat: f64, x: &[f64]) -> Result<f64> {
    spec.require_inside(x)?;
    let e = y_hat - spec.g(x);
    Ok(e * e)
}

/// Monte Carlo estimate of `E[(ŷ − y)² | x]` from `m` label draws.
pub fn conditional_loss_mc(
    spec: &DistributionSpec,
    y_hat: f64,
    x: &[f64],
    m: usize,
    seed: u64,
) -> Result<McEstimate> {
    spec.require_inside(x)?;
    let mut r = rng::rng(seed);
    let moments: Moments = (0..m)
        .map(|_| {
            let e = y_hat - spec.draw_label(&mut r, x);
            e * e
        })
        .collect();
    Ok(moments.into())
}

/// `ρ = 2Φ(−1)`.
pub fn gaussian_rho() -> f64 {
    libm::erfc(std::f64::consts::FRAC_1_SQRT_2)
}

pub fn noise_constants(spec: &DistributionSpec) -> NoiseConstants {
    NoiseConstants {
        sigma_floor: spec.sigma_min * spec.sigma_min,
        rho: gaussian_rho(),
        quoted_rho: QUOTED_RHO,
        c_y: std::f64::consts::SQRT_2 * (spec.sup_g() + spec.sigma_max),
    }
}

fn bernoulli(hits: u64, m: u64) -> (f64, f64) {
    let p = hits as f64 / m as f64;
    (p, (p * (1.0 - p) / m as f64).sqrt())
}

/// Checks the noise constants by Monte Carlo at `probes` input draws with
/// `draws` labels each: the exceedance rate against `ρ` and the label tail
/// against `2 exp(−t²/C_y²)` at `t ∈ {1, 2, 3}`, both with 3-stderr slack.
pub fn verify_noise_constants(
    spec: &DistributionSpec,
    probes: usize,
    draws: u64,
    seed: u64,
) -> Result<NoiseCheck> {
    let constants = noise_constants(spec);
    let mut probe_rng = rng::stream(seed, 0);
    let xs = spec.draw_inputs(&mut probe_rng, probes)?;
    let mut passed = true;
    let mut rows = Vec::with_capacity(probes);
    for (j, x) in xs.chunks(spec.dim).enumerate() {
        let mut r = rng::stream(seed, j as u64 + 1);
        let gx = spec.g(x);
        let mut exceed = 0u64;
        let mut tail_hits = [0u64; 3];
        for _ in 0..draws {
            let y = spec.draw_label(&mut r, x);
            if (y - gx) * (y - gx) >= constants.sigma_floor {
                exceed += 1;
            }
            for (t, hits) in tail_hits.iter_mut().enumerate() {
                if y.abs() >= (t + 1) as f64 {
                    *hits += 1;
                }
            }
        }
        let (exceed_rate, exceed_stderr) = bernoulli(exceed, draws);
        passed &= exceed_rate >= constants.rho - 3.0 * exceed_stderr;
        let tails = tail_hits
            .iter()
            .enumerate()
            .map(|(t, &hits)| {
                let t = (t + 1) as f64;
                let (rate, se) = bernoulli(hits, draws);
                let bound = 2.0 * (-t * t / (constants.c_y * constants.c_y)).exp();
                passed &= rate <= bound + 3.0 * se;
                (t, rate, se, bound)
            })
            .collect();
        rows.push(NoiseProbe {
            x: x.to_vec(),
            exceed_rate,
            exceed_stderr,
            tails,
        });
    }
    Ok(NoiseCheck {
        constants,
        probes: rows,
        passed,
    })
}

/// Indices that are far from their neighbors, carry a bounded label and a
/// noisy one: `Z_i Y_i W_i = 1`.
pub fn noisy_separated_subset(
    dataset: &Dataset,
    radii: &NnRadii,
    spec: &DistributionSpec,
) -> Result<SubsetSelection> {
    let n = dataset.len();
    if radii.len() != n {
        return Err(Error::MismatchedLengths {
            expected: n,
            got: radii.len(),
        });
    }
    if dataset.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: dataset.dim(),
        });
    }
    let constants = noise_constants(spec);
    let c1 = spec.big_c_d * unit_ball_volume(spec.dim);
    let radius_threshold = (2.0 * c1 * n as f64).powf(-1.0 / spec.dim as f64);
    let label_cap = constants.label_cap();
    let mut sel = SubsetSelection {
        indices: Vec::new(),
        z: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
        radius_threshold,
        label_cap,
        sigma_floor: constants.sigma_floor,
    };
    for i in 0..n {
        let yi = dataset.label(i);
        let e = yi - spec.g(dataset.point(i));
        let (z, y, w) = (
            radii[i] >= radius_threshold,
            yi.abs() <= label_cap,
            e * e >= constants.sigma_floor,
        );
        if z && y && w {
            sel.indices.push(i);
        }
        sel.z.push(z);
        sel.y.push(y);
        sel.w.push(w);
    }
    Ok(sel)
}

/// Monte Carlo estimate of `|Ω ∩ B(x0, δ)| / |B(x0, δ)|` from `m` uniform
/// draws in `B(x0, δ)`.
pub fn domain_ball_fraction(
    spec: &DistributionSpec,
    x0: &[f64],
    delta: f64,
    m: u64,
    seed: u64,
) -> Result<McEstimate> {
    if x0.len() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: x0.len(),
        });
    }
    let norm = sq_dist(x0, &vec![0.0; spec.dim]).sqrt();
    if norm > spec.radius * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain {
            radius: spec.radius,
        });
    }
    if !(delta > 0.0 && delta <= 2.0 * spec.radius) {
        return Err(Error::InvalidParams(format!(
            "ball radius {delta} must lie in (0, diam] = (0, {}]",
            2.0 * spec.radius
        )));
    }
    let mut r = rng::rng(seed);
    let mut x = vec![0.0; spec.dim];
    let r2 = spec.radius * spec.radius;
    let mut hits = 0u64;
    for _ in 0..m {
        DistributionSpec::uniform_in_ball(&mut r, x0, delta, &mut x);
        if x.iter().map(|v| v * v).sum::<f64>() <= r2 {
            hits += 1;
        }
    }
    let (mean, stderr) = bernoulli(hits, m);
    Ok(McEstimate {
        mean,
        stderr,
        samples: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::nn_radii;

    fn tilted(d: usize) -> DistributionSpec {
        DistributionSpec::new(
            d,
            1.0,
            Density::RadialQuadratic { tilt: 0.8 },
            vec![GroundBump {
                center: vec![0.2; d],
                radius: 0.5,
                height: 1.5,
            }],
            NoiseProfile::Radial { a: 0.5, b: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn construction_validates() {
        let spec = tilted(2);
        assert!((spec.density_integral() - 1.0).abs() < 1e-12);
        assert!(spec.c_d() < spec.big_c_d());
        assert_eq!(spec.sigma_min(), 0.5f64.sqrt());
        assert_eq!(spec.sigma_max(), 1.5f64.sqrt());
        let outside = GroundBump {
            center: vec![0.8],
            radius: 0.5,
            height: 1.0,
        };
        assert!(DistributionSpec::new(
            1,
            1.0,
            Density::Uniform,
            vec![outside],
            NoiseProfile::Constant { sigma: 1.0 }
        )
        .is_err());
        assert!(DistributionSpec::new(1, 1.0, Density::Uniform, vec![], NoiseProfile::Radial { a: 0.0, b: 1.0 }).is_err());
        assert!(spec.clone().with_density_bounds(1.0, 2.0).is_err());
    }

    #[test]
    fn uniform_sampling_moments_and_symmetry() {
        let spec = DistributionSpec::pure_noise(2).unwrap();
        let n = 100_000;
        let data = sample(&spec, n, 42).unwrap();
        let half = data.points().filter(|x| x[0] > 0.0).count() as f64 / n as f64;
        assert!((half - 0.5).abs() <= 3.0 * (0.25 / n as f64).sqrt());
        let m: Moments = data.labels().iter().copied().collect();
        assert!(m.mean.abs() <= 3.0 / (n as f64).sqrt());
        assert!((m.variance() - 1.0).abs() <= 0.05);
        assert!(data.points().all(|x| spec.contains(x)));
        assert_eq!(sample(&spec, n, 42).unwrap(), data);
        assert!(matches!(sample(&spec, 1, 0), Err(Error::TooFewPoints(1))));
    }

    #[test]
    fn density_sandwich_on_histogram() {
        let spec = tilted(1);
        let n = 100_000u64;
        let data = sample(&spec, n as usize, 9).unwrap();
        let cells = 20;
        let width = 2.0 / cells as f64;
        let mut counts = vec![0u64; cells];
        for x in data.points() {
            let c = (((x[0] + 1.0) / width) as usize).min(cells - 1);
            counts[c] += 1;
        }
        for &c in &counts {
            let p = c as f64 / n as f64;
            let slack = 4.0 * (p * (1.0 - p) / n as f64).sqrt() / width;
            let height = p / width;
            assert!(height >= spec.c_d() - slack && height <= spec.big_c_d() + slack);
        }
    }

    #[test]
    fn misdeclared_envelope_exhausts_budget() {
        let spec = tilted(1).with_density_bounds(0.1, 1e6).unwrap();
        assert!(matches!(
            sample(&spec, 100, 1),
            Err(Error::RejectionBudgetExceeded { .. })
        ));
    }

    #[test]
    fn loss_and_regret_closed_forms() {
        let pure = DistributionSpec::pure_noise(1).unwrap();
        assert_eq!(conditional_loss(&pure, 2.0, &[0.3]).unwrap(), 5.0);
        assert!(matches!(
            conditional_loss(&pure, 2.0, &[1.5]),
            Err(Error::OutOfDomain { .. })
        ));
        let spec = tilted(2);
        let x = [0.2, 0.2];
        let gx = spec.g(&x);
        assert_eq!(gx, 1.5);
        assert_eq!(conditional_loss(&spec, gx, &x).unwrap(), spec.sigma2(&x));
        assert_eq!(regret(&spec, gx, &x).unwrap(), 0.0);
        assert_eq!(regret(&spec, gx + 2.0, &x).unwrap(), 4.0);

        let mut r = rng::rng(5);
        for _ in 0..100 {
            let mut x = [0.0; 2];
            spec.draw_x(&mut r, 1000, &mut x).unwrap();
            let y_hat: f64 = r.random_range(-3.0..3.0);
            let lhs = regret(&spec, y_hat, &x).unwrap();
            let rhs = conditional_loss(&spec, y_hat, &x).unwrap() - spec.sigma2(&x);
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs));
            // Grid minimization recovers g(x) and σ(x)².
            let step = 1e-3;
            let best = (-6000..=6000)
                .map(|j| gx_grid(&spec, &x, j as f64 * step))
                .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
            assert!((best.1 - spec.g(&x)).abs() <= step);
            assert!((best.0 - spec.sigma2(&x)).abs() <= step * step);
        }
    }

    fn gx_grid(spec: &DistributionSpec, x: &[f64], y: f64) -> (f64, f64) {
        (conditional_loss(spec, y, x).unwrap(), y)
    }

    #[test]
    fn conditional_loss_matches_monte_carlo() {
        let spec = tilted(2);
        let x = [0.1, -0.3];
        for (k, y_hat) in [-1.0, 0.4, 2.5].into_iter().enumerate() {
            let mc = conditional_loss_mc(&spec, y_hat, &x, 100_000, k as u64).unwrap();
            let exact = conditional_loss(&spec, y_hat, &x).unwrap();
            assert!((mc.mean - exact).abs() <= 3.0 * mc.stderr, "{mc:?} vs {exact}");
        }
    }

    #[test]
    fn noise_constants_values_and_checks() {
        let pure = DistributionSpec::pure_noise(1).unwrap();
        let c = noise_constants(&pure);
        assert!((c.rho - 0.317_310_507_862_914).abs() < 1e-12, "{}", c.rho);
        assert!(c.quoted_rho <= c.rho);
        assert_eq!(c.sigma_floor, 1.0);
        assert_eq!(c.c_y, std::f64::consts::SQRT_2);
        let check = verify_noise_constants(&pure, 20, 100_000, 3).unwrap();
        assert!(check.passed, "{check:?}");
        for p in &check.probes {
            assert!((p.exceed_rate - c.rho).abs() <= 3.0 * p.exceed_stderr);
        }
        let check = verify_noise_constants(&tilted(2), 20, 20_000, 4).unwrap();
        assert!(check.passed);
    }

    #[test]
    fn subset_examples() {
        let pure = DistributionSpec::pure_noise(1).unwrap();
        // Labels equal to g = 0 are never noisy.
        let data = Dataset::from_line(&[-0.9, 0.9], &[0.0, 0.0]).unwrap();
        let radii = nn_radii(&data).unwrap();
        let sel = noisy_separated_subset(&data, &radii, &pure).unwrap();
        assert!(sel.indices.is_empty());
        assert_eq!(sel.w, vec![false, false]);

        // Threshold (2·1·3)^{−1} = 1/6 and label cap √2·√log(4/ρ) ≈ 2.25.
        let data = Dataset::from_line(&[-0.9, 0.0, 0.9], &[0.5, 1.7, 0.2]).unwrap();
        let radii = nn_radii(&data).unwrap();
        let sel = noisy_separated_subset(&data, &radii, &pure).unwrap();
        assert!((sel.radius_threshold - 1.0 / 6.0).abs() < 1e-15);
        assert!((sel.label_cap - 2.0f64.sqrt() * (4.0 / gaussian_rho()).ln().sqrt()).abs() < 1e-15);
        assert_eq!(sel.indices, vec![1]);
    }

    #[test]
    fn subset_members_satisfy_all_conditions() {
        let spec = tilted(2);
        let data = sample(&spec, 2048, 17).unwrap();
        let radii = nn_radii(&data).unwrap();
        let sel = noisy_separated_subset(&data, &radii, &spec).unwrap();
        let c = noise_constants(&spec);
        assert!(!sel.indices.is_empty());
        for &i in &sel.indices {
            assert!(radii[i] >= sel.radius_threshold);
            assert!(data.label(i).abs() <= c.label_cap());
            assert!(regret(&spec, data.label(i), data.point(i)).unwrap() >= c.sigma_floor);
        }
    }

    #[test]
    fn ball_fraction_examples() {
        for d in 1..=3 {
            let spec = DistributionSpec::pure_noise(d).unwrap();
            let origin = vec![0.0; d];
            let est = domain_ball_fraction(&spec, &origin, 1.0, 10_000, 1).unwrap();
            assert_eq!(est.mean, 1.0);
            let mut edge = vec![0.0; d];
            edge[0] = 1.0;
            let est = domain_ball_fraction(&spec, &edge, 2.0, 200_000, 2).unwrap();
            let exact = 0.5f64.powi(d as i32);
            assert!((est.mean - exact).abs() <= 4.0 * est.stderr, "{d}: {est:?}");
        }
        let spec = DistributionSpec::pure_noise(1).unwrap();
        let est = domain_ball_fraction(&spec, &[1.0], 1.0, 100_000, 3).unwrap();
        assert!((est.mean - 0.5).abs() <= 4.0 * est.stderr);
        assert!(matches!(
            domain_ball_fraction(&spec, &[1.5], 1.0, 10, 0),
            Err(Error::OutOfDomain { .. })
        ));
    }
}
